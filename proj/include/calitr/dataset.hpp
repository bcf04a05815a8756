#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "calitr/types.hpp"

namespace calitr {

// Numeric table as read from a comma-separated file. Lines starting with '#'
// (provenance headers) are skipped.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable parse_csv(std::string_view text);
RawTable read_csv(const std::filesystem::path& path);

// Requires columns y, a, x1..xp (any order, extra columns ignored). X keeps
// the x1..xp order.
SourceSample validate_dataset(const RawTable& table);

SourceSample read_sample(const std::filesystem::path& path);

// Header y,a,x1..xp; doubles written in shortest round-trip form.
std::string format_sample_csv(const SourceSample& sample);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace calitr
