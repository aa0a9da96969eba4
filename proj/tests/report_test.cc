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

#include <fstream>
#include <sstream>

#include "absl/strings/match.h"
#include "absl/strings/str_split.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace nlicheck {
namespace {

using ::testing::HasSubstr;
using ::testing::UnorderedElementsAre;

CapabilityReport TwoCapabilityReport(const std::string& model) {
  CapabilityReport r;
  r.model_id = model;
  const auto& reg = CapabilityRegistry::Default();
  r.capabilities.push_back({*reg.Find("lexical"), 0.75, 0.7, 40, 2});
  r.capabilities.push_back({*reg.Find("negation"), 0.1, 0.125, 20, 1});
  r.verdicts.push_back({"lex-1", *reg.Find("lexical"), 0.9, 20,
                        TemplateStatus::kPassed});
  r.verdicts.push_back({"lex-2", *reg.Find("lexical"), 0.5, 20,
                        TemplateStatus::kUnsure});
  r.verdicts.push_back({"neg,1", *reg.Find("negation"), 0.1, 20,
                        TemplateStatus::kFailed});
  r.histogram = {1, 0, 1, 0, 1};
  r.overall = 0.5333333;
  r.examples = 60;
  return r;
}

size_t Count(const std::string& text, const std::string& needle) {
  size_t n = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

TEST(ReportCsvTest, CapabilityAndVerdictRows) {
  const std::vector<CapabilityReport> reports = {TwoCapabilityReport("m1")};
  EXPECT_EQ(CapabilityCsv(reports),
            "model_id,capability,group,templates,examples,micro,macro\n"
            "m1,lexical,Linguistic,2,40,0.7500,0.7000\n"
            "m1,negation,Logical,1,20,0.1000,0.1250\n"
            "m1,overall,,3,60,0.5333,\n");
  EXPECT_EQ(VerdictCsv(reports),
            "model_id,template_id,capability,accuracy,n,status\n"
            "m1,lex-1,lexical,0.9000,20,passed\n"
            "m1,lex-2,lexical,0.5000,20,unsure\n"
            "m1,\"neg,1\",negation,0.1000,20,failed\n");
  EXPECT_EQ(HistogramCsv(reports),
            "model_id,0-20,20-40,40-60,60-80,80-100\nm1,1,0,1,0,1\n");
}

TEST(ReportCsvTest, SliceAndImportance) {
  std::vector<SliceRow> rows = {{"engineer", "", 0.25, 12, false},
                                {"nurse \"RN\"", "female", 1.0, 3, true}};
  EXPECT_EQ(SliceCsv(rows),
            "value,attribute,accuracy,n,low_support\n"
            "engineer,,0.2500,12,false\n"
            "\"nurse \"\"RN\"\"\",female,1.0000,3,true\n");
  ImportanceResult imp;
  imp.names = {"NAME", "Antonym(ADJ)"};
  imp.coefficients = {0.5, -0.25};
  imp.intercept = 0.1;
  EXPECT_EQ(ImportanceCsv(imp),
            "feature,coefficient\nNAME,0.500000\nAntonym(ADJ),-0.250000\n"
            "(intercept),0.100000\n");
}

TEST(ReportSvgTest, HeatmapHasOneCellPerScoreAndEscapesNames) {
  const std::vector<CapabilityReport> reports = {TwoCapabilityReport("a<b"),
                                                 TwoCapabilityReport("m2")};
  const std::string svg = CapabilityHeatmapSvg(reports);
  EXPECT_TRUE(absl::StartsWith(svg, "<svg "));
  EXPECT_TRUE(absl::EndsWith(svg, "</svg>\n"));
  // Two capabilities plus overall, for each of two models.
  EXPECT_EQ(Count(svg, "<rect"), 6u);
  EXPECT_THAT(svg, HasSubstr("a&lt;b"));
  EXPECT_THAT(svg, ::testing::Not(HasSubstr("a<b")));
  EXPECT_THAT(svg, HasSubstr(">75.0<"));
  EXPECT_EQ(Count(svg, "<text"), Count(svg, "</text>"));
}

TEST(ReportSvgTest, HistogramAndImportanceBars) {
  const std::vector<CapabilityReport> reports = {TwoCapabilityReport("m1")};
  const std::string hist = HistogramSvg(reports);
  // Five bars plus one legend swatch.
  EXPECT_EQ(Count(hist, "<rect"), 6u);
  EXPECT_THAT(hist, HasSubstr(">80-100<"));

  ImportanceResult imp;
  imp.names = {"small", "big", "neg"};
  imp.coefficients = {0.1, 0.9, -0.5};
  const std::string svg = ImportanceSvg(imp);
  EXPECT_EQ(Count(svg, "<rect"), 3u);
  // Sorted by magnitude: big, neg, small.
  EXPECT_LT(svg.find(">big<"), svg.find(">neg<"));
  EXPECT_LT(svg.find(">neg<"), svg.find(">small<"));
  EXPECT_THAT(svg, HasSubstr("#e15759"));  // negative bar colour
}

TEST(ReportDirectoryTest, WritesExpectedFiles) {
  testing::TempDir dir;
  const std::vector<CapabilityReport> reports = {TwoCapabilityReport("org/m1")};
  ImportanceResult imp;
  imp.names = {"NAME"};
  imp.coefficients = {0.2};
  std::vector<NamedSlice> slices = {
      {"T1:PROFESSION:gender", {{"nurse", "female", 1.0, 12, false}}}};
  const std::filesystem::path out = dir.path() / "report";
  ASSERT_OK(WriteReportDirectory(out, reports, &imp, slices));
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(out)) {
    names.push_back(entry.path().filename().string());
  }
  EXPECT_THAT(names,
              UnorderedElementsAre(
                  "report_org_m1.json", "capabilities.csv", "verdicts.csv",
                  "histogram.csv", "capabilities.svg", "histogram.svg",
                  "importance.json", "importance.csv", "importance.svg",
                  "slice_T1_PROFESSION_gender.csv"));
  std::ifstream in(out / "report_org_m1.json");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), CapabilityReportToJson(reports[0]));
}

}  // namespace
}  // namespace nlicheck
