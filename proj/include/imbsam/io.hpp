#pragma once

#include "imbsam/param_vector.hpp"
#include "imbsam/runner.hpp"

#include <span>
#include <string>
#include <vector>

namespace imbsam {

// Result records round-trip through JSON; non-finite doubles map to null.
std::string result_to_json(const RunResult& result);
RunResult result_from_json(const std::string& text);
void write_result_json(const RunResult& result, const std::string& path);
RunResult read_result_json(const std::string& path);

// Textual parameter dump: layout header plus one %.17g value per line.
// Round-trips bit-exactly.
void write_checkpoint(const ParamLayout& layout, const Vector& values, const std::string& path);
ParamVector read_checkpoint(const std::string& path);

void write_metrics_csv(std::span<const RunResult> results, const std::string& path);
void write_sharpness_csv(std::span<const SharpnessReport> reports, const std::string& config_hash,
                         const std::string& optimizer, std::uint64_t seed,
                         const std::string& path);
void write_landscape_csv(const LandscapeSlice& slice, const std::string& run_id,
                         const std::string& restriction, const std::string& path);
void write_grid_csv(std::span<const GridCell> cells, const std::string& path);
void write_gain_csv(const GainReport& report, const std::string& run_a, const std::string& run_b,
                    const std::string& path);

}  // namespace imbsam
