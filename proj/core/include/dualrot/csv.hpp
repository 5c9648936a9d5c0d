// SPDX-License-Identifier: Apache-2.0
//
// CSV emission for experiment results: a results file (one row per run) and
// a sibling long-format trace file (one row per run and iteration). Floats
// are written with 17 significant digits so parsing reproduces them exactly.

#pragma once

#include <string>
#include <vector>

#include "dualrot/experiment.hpp"

namespace dualrot {

// Writes `path` and the sibling trace file; throws std::runtime_error with
// the path on I/O failure.
void emit_csv(const std::vector<ExperimentResult>& rows, const std::string& path);

// "<stem>_trace.csv" next to the results file.
std::string trace_path(const std::string& results_path);

// Minimal reader for round-trip checks: returns all records split by commas
// (the emitted files contain no quoted fields).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace dualrot
