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

// Report files for the analyze command: CSV tables and static SVG figures.

#ifndef NLICHECK_REPORT_H_
#define NLICHECK_REPORT_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "nlicheck/analysis.h"

namespace nlicheck {

std::string CapabilityCsv(const std::vector<CapabilityReport>& reports);
std::string VerdictCsv(const std::vector<CapabilityReport>& reports);
std::string HistogramCsv(const std::vector<CapabilityReport>& reports);
std::string SliceCsv(const std::vector<SliceRow>& rows);
std::string ImportanceCsv(const ImportanceResult& result);

// Capability x model accuracy grid.
std::string CapabilityHeatmapSvg(const std::vector<CapabilityReport>& reports);
// Template counts per accuracy bin, one bar group per bin.
std::string HistogramSvg(const std::vector<CapabilityReport>& reports);
// Coefficients as horizontal bars, largest magnitude first.
std::string ImportanceSvg(const ImportanceResult& result);

struct NamedSlice {
  std::string name;  // e.g. "T1:PROFESSION:gender"
  std::vector<SliceRow> rows;
};

// Writes report_<model>.json per model, capabilities/verdicts/histogram CSVs,
// both figures, and, when given, importance and slice tables.
absl::Status WriteReportDirectory(const std::filesystem::path& dir,
                                  const std::vector<CapabilityReport>& reports,
                                  const ImportanceResult* importance,
                                  const std::vector<NamedSlice>& slices);

}  // namespace nlicheck

#endif  // NLICHECK_REPORT_H_
