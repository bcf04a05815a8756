#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "calitr/calibration.hpp"
#include "calitr/constraints.hpp"
#include "calitr/types.hpp"

namespace calitr {

using nlohmann::json;

inline constexpr std::string_view kToolName = "calitr";
inline constexpr std::string_view kToolVersion = "1.0.0";

// ---- files -----------------------------------------------------------------

// Throws Error{MissingFile} or Error{ParseError}.
std::string read_text(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);
// Throws Error{MissingFile} when the file cannot be opened for writing.
void write_text(const std::filesystem::path& path, std::string_view text);

// ---- canonical JSON --------------------------------------------------------

// Every floating-point number rounded to `digits` significant digits.
json round_significant(const json& j, int digits = 12);
// Sorted keys, two-space indent, rounded floats, trailing newline.
std::string canonical_dump(const json& j);
// %.12g; used for CSV and TSV cells.
std::string format_g12(double v);

std::uint64_t fnv1a64(std::string_view bytes);
// 16 lowercase hex digits of fnv1a64(canonical_dump(config)).
std::string config_hash(const json& config);

// {"tool", "version", "command", "seed", "config_hash"}.
json provenance(std::string_view command, std::uint64_t seed, const json& config);
// "# " + compact provenance JSON, for CSV and TSV files.
std::string provenance_line(const json& prov);

// ---- constraint specs ------------------------------------------------------

// {"moments":[{"kind":"mean","index":1},{"kind":"mean2","index":2},
//  {"kind":"cross","i":1,"j":3}],"targets":[...]}
// Throws Error{ParseError} for malformed documents and
// Error{UnsupportedMoment} for kinds other than mean, mean2 and cross.
ConstraintSpec constraint_spec_from_json(const json& j);
json to_json(const ConstraintSpec& spec);
ConstraintSpec read_constraint_spec(const std::filesystem::path& path);

// ---- rules and weights -----------------------------------------------------

// {"beta":[...], "value":v, "se":s}
json rule_to_json(const LinearRule& rule, double value, double se);
// Reads "beta". Throws Error{ParseError}.
LinearRule rule_from_json(const json& j);

// Columns i,weight,W (i is 1-based).
std::string weights_csv(const WeightSolution& ws);
// Returns the weight column. Throws Error{MissingColumn} without it.
Vector read_weights(const std::filesystem::path& path);

// lambda, residual, flags.
json weight_diagnostics(const WeightSolution& ws);

}  // namespace calitr
