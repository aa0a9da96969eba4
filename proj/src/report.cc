// Copyright 2026 The nlicheck Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nlicheck/report.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "io_util.h"

namespace nlicheck {

namespace {

std::string Num(double v) { return absl::StrFormat("%.4f", v); }

std::string XmlEscape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

// Red (0) through yellow to green (1).
std::string AccuracyColor(double a) {
  a = std::clamp(a, 0.0, 1.0);
  int r = a < 0.5 ? 215 : static_cast<int>(215 - (a - 0.5) * 2 * 189);
  int g = a < 0.5 ? static_cast<int>(48 + a * 2 * 167) : 215;
  return absl::StrFormat("#%02x%02x%02x", r, g, 39);
}

std::string SafeFileName(std::string_view name) {
  std::string out;
  for (char c : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                          c == '_' || c == '.'
                      ? c
                      : '_');
  }
  return out.empty() ? "model" : out;
}

constexpr const char* kBinLabels[5] = {"0-20", "20-40", "40-60", "60-80",
                                       "80-100"};

}  // namespace

std::string CapabilityCsv(const std::vector<CapabilityReport>& reports) {
  std::string out = "model_id,capability,group,templates,examples,micro,macro\n";
  for (const CapabilityReport& r : reports) {
    for (const CapabilityScore& c : r.capabilities) {
      absl::StrAppend(&out, CsvEscape(r.model_id), ",", c.capability.name, ",",
                      std::string(GroupName(c.capability.group)), ",",
                      c.templates, ",", c.examples, ",", Num(c.micro), ",",
                      Num(c.macro), "\n");
    }
    absl::StrAppend(&out, CsvEscape(r.model_id), ",overall,,",
                    r.verdicts.size(), ",", r.examples, ",", Num(r.overall),
                    ",\n");
  }
  return out;
}

std::string VerdictCsv(const std::vector<CapabilityReport>& reports) {
  std::string out = "model_id,template_id,capability,accuracy,n,status\n";
  for (const CapabilityReport& r : reports) {
    for (const TemplateVerdict& v : r.verdicts) {
      absl::StrAppend(&out, CsvEscape(r.model_id), ",",
                      CsvEscape(v.template_id), ",", v.capability.name, ",",
                      Num(v.accuracy), ",", v.n, ",",
                      std::string(StatusName(v.status)), "\n");
    }
  }
  return out;
}

std::string HistogramCsv(const std::vector<CapabilityReport>& reports) {
  std::string out = "model_id";
  for (const char* label : kBinLabels) absl::StrAppend(&out, ",", label);
  out += "\n";
  for (const CapabilityReport& r : reports) {
    out += CsvEscape(r.model_id);
    for (int count : r.histogram) absl::StrAppend(&out, ",", count);
    out += "\n";
  }
  return out;
}

std::string SliceCsv(const std::vector<SliceRow>& rows) {
  std::string out = "value,attribute,accuracy,n,low_support\n";
  for (const SliceRow& row : rows) {
    absl::StrAppend(&out, CsvEscape(row.value), ",", CsvEscape(row.attribute),
                    ",", Num(row.accuracy), ",", row.n, ",",
                    row.low_support ? "true" : "false", "\n");
  }
  return out;
}

std::string ImportanceCsv(const ImportanceResult& result) {
  std::string out = "feature,coefficient\n";
  for (size_t i = 0; i < result.names.size(); ++i) {
    absl::StrAppend(&out, CsvEscape(result.names[i]), ",",
                    absl::StrFormat("%.6f", result.coefficients[i]), "\n");
  }
  absl::StrAppend(&out, "(intercept),",
                  absl::StrFormat("%.6f", result.intercept), "\n");
  return out;
}

std::string CapabilityHeatmapSvg(const std::vector<CapabilityReport>& reports) {
  std::vector<Capability> rows;
  for (const Capability& c : CapabilityRegistry::Default().All()) {
    for (const CapabilityReport& r : reports) {
      if (r.Find(c.name) != nullptr) {
        rows.push_back(c);
        break;
      }
    }
  }
  const int label_w = 140, cell_w = 110, cell_h = 24, top = 40;
  const int width = label_w + cell_w * static_cast<int>(reports.size()) + 10;
  const int height = top + cell_h * static_cast<int>(rows.size() + 1) + 10;
  std::string out = absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height);
  for (size_t m = 0; m < reports.size(); ++m) {
    absl::StrAppend(&out, absl::StrFormat(
        "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n",
        label_w + cell_w * static_cast<int>(m) + cell_w / 2, top - 12,
        XmlEscape(reports[m].model_id)));
  }
  auto cell = [&](int row, size_t m, double value) {
    int x = label_w + cell_w * static_cast<int>(m);
    int y = top + cell_h * row;
    absl::StrAppend(&out, absl::StrFormat(
        "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" "
        "stroke=\"white\"/>\n<text x=\"%d\" y=\"%d\" "
        "text-anchor=\"middle\">%.1f</text>\n",
        x, y, cell_w, cell_h, AccuracyColor(value), x + cell_w / 2,
        y + cell_h / 2 + 4, value * 100.0));
  };
  for (size_t r = 0; r < rows.size(); ++r) {
    absl::StrAppend(&out, absl::StrFormat(
        "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n",
        label_w - 8, top + cell_h * static_cast<int>(r) + cell_h / 2 + 4,
        XmlEscape(rows[r].name)));
    for (size_t m = 0; m < reports.size(); ++m) {
      const CapabilityScore* score = reports[m].Find(rows[r].name);
      if (score != nullptr) cell(static_cast<int>(r), m, score->micro);
    }
  }
  const int last = static_cast<int>(rows.size());
  absl::StrAppend(&out, absl::StrFormat(
      "<text x=\"%d\" y=\"%d\" text-anchor=\"end\" "
      "font-weight=\"bold\">overall</text>\n",
      label_w - 8, top + cell_h * last + cell_h / 2 + 4));
  for (size_t m = 0; m < reports.size(); ++m) {
    cell(last, m, reports[m].overall);
  }
  out += "</svg>\n";
  return out;
}

std::string HistogramSvg(const std::vector<CapabilityReport>& reports) {
  static constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f",
                                             "#e15759", "#76b7b2", "#edc948"};
  int max_count = 1;
  for (const CapabilityReport& r : reports) {
    for (int c : r.histogram) max_count = std::max(max_count, c);
  }
  const int left = 40, bottom = 230, plot_h = 180, group_w = 100;
  const int bar_w =
      std::max(4, (group_w - 20) / std::max<int>(1, reports.size()));
  const int width = left + group_w * 5 + 20;
  std::string out = absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      width, bottom + 60);
  absl::StrAppend(&out, absl::StrFormat(
      "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
      left, bottom, width - 10, bottom));
  for (int b = 0; b < 5; ++b) {
    int gx = left + group_w * b + 10;
    for (size_t m = 0; m < reports.size(); ++m) {
      int count = reports[m].histogram[b];
      int h = count * plot_h / max_count;
      int x = gx + bar_w * static_cast<int>(m);
      absl::StrAppend(&out, absl::StrFormat(
          "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
          "fill=\"%s\"/>\n<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" "
          "font-size=\"10\">%d</text>\n",
          x, bottom - h, bar_w - 2, h, kPalette[m % 6], x + bar_w / 2,
          bottom - h - 3, count));
    }
    absl::StrAppend(&out, absl::StrFormat(
        "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n",
        gx + (group_w - 20) / 2, bottom + 16, kBinLabels[b]));
  }
  for (size_t m = 0; m < reports.size(); ++m) {
    int x = left + 120 * static_cast<int>(m);
    absl::StrAppend(&out, absl::StrFormat(
        "<rect x=\"%d\" y=\"%d\" width=\"10\" height=\"10\" fill=\"%s\"/>\n"
        "<text x=\"%d\" y=\"%d\">%s</text>\n",
        x, bottom + 32, kPalette[m % 6], x + 14, bottom + 41,
        XmlEscape(reports[m].model_id)));
  }
  out += "</svg>\n";
  return out;
}

std::string ImportanceSvg(const ImportanceResult& result) {
  std::vector<size_t> order(result.names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::abs(result.coefficients[a]) > std::abs(result.coefficients[b]);
  });
  double max_abs = 1e-12;
  for (double c : result.coefficients) max_abs = std::max(max_abs, std::abs(c));
  const int label_w = 180, half = 200, row_h = 18, top = 20;
  const int axis = label_w + half;
  std::string out = absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      label_w + 2 * half + 20, top + row_h * static_cast<int>(order.size()) + 20);
  for (size_t r = 0; r < order.size(); ++r) {
    double c = result.coefficients[order[r]];
    int len = static_cast<int>(std::round(std::abs(c) / max_abs * (half - 10)));
    int y = top + row_h * static_cast<int>(r);
    absl::StrAppend(&out, absl::StrFormat(
        "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n"
        "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\"/>\n",
        label_w - 6, y + row_h - 5, XmlEscape(result.names[order[r]]),
        c >= 0 ? axis : axis - len, y + 2, len, row_h - 4,
        c >= 0 ? "#59a14f" : "#e15759"));
  }
  absl::StrAppend(&out, absl::StrFormat(
      "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
      axis, top, axis, top + row_h * static_cast<int>(order.size())));
  out += "</svg>\n";
  return out;
}

absl::Status WriteReportDirectory(const std::filesystem::path& dir,
                                  const std::vector<CapabilityReport>& reports,
                                  const ImportanceResult* importance,
                                  const std::vector<NamedSlice>& slices) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  auto write = [&](const std::string& name, const std::string& text) {
    return WriteFileAtomic(dir / name, text);
  };
  for (const CapabilityReport& r : reports) {
    if (absl::Status s = write("report_" + SafeFileName(r.model_id) + ".json",
                               CapabilityReportToJson(r));
        !s.ok()) {
      return s;
    }
  }
  const std::pair<std::string, std::string> files[] = {
      {"capabilities.csv", CapabilityCsv(reports)},
      {"verdicts.csv", VerdictCsv(reports)},
      {"histogram.csv", HistogramCsv(reports)},
      {"capabilities.svg", CapabilityHeatmapSvg(reports)},
      {"histogram.svg", HistogramSvg(reports)},
  };
  for (const auto& [name, text] : files) {
    if (absl::Status s = write(name, text); !s.ok()) return s;
  }
  if (importance != nullptr) {
    for (const auto& [name, text] :
         {std::pair<std::string, std::string>{"importance.json",
                                              ImportanceToJson(*importance)},
          {"importance.csv", ImportanceCsv(*importance)},
          {"importance.svg", ImportanceSvg(*importance)}}) {
      if (absl::Status s = write(name, text); !s.ok()) return s;
    }
  }
  for (const NamedSlice& slice : slices) {
    if (absl::Status s =
            write("slice_" + SafeFileName(slice.name) + ".csv",
                  SliceCsv(slice.rows));
        !s.ok()) {
      return s;
    }
  }
  return absl::OkStatus();
}

}  // namespace nlicheck
