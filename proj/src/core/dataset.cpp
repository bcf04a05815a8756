#include "calitr/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "calitr/error.hpp"

namespace calitr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
  // from_chars does not accept a leading '+'.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw Error(Errc::ParseError, "line " + std::to_string(line_no) +
                                      ": cannot parse '" + std::string(field) +
                                      "' as a number");
  }
  return value;
}

}  // namespace

RawTable parse_csv(std::string_view text) {
  RawTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line);
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(f);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(Errc::ParseError,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_number(f, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) {
    throw Error(Errc::ParseError, "file has no header row");
  }
  return table;
}

RawTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::MissingFile, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

SourceSample validate_dataset(const RawTable& table) {
  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    column[table.header[c]] = c;
  }
  if (!column.contains("y") || !column.contains("a")) {
    throw Error(Errc::MissingColumn, "columns 'y' and 'a' are required");
  }
  std::vector<std::size_t> xcols;
  for (int j = 1;; ++j) {
    auto it = column.find("x" + std::to_string(j));
    if (it == column.end()) break;
    xcols.push_back(it->second);
  }
  if (xcols.empty()) {
    throw Error(Errc::MissingColumn, "no covariate columns x1..xp found");
  }

  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(xcols.size());
  if (n < 2) {
    throw Error(Errc::TooFewRows,
                "need at least 2 observations, got " + std::to_string(n));
  }
  Matrix X(n, p);
  IntVector A(n);
  Vector Y(n);
  const std::size_t ycol = column["y"];
  const std::size_t acol = column["a"];
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const double a = row[acol];
    if (!std::isfinite(a)) {
      throw Error(Errc::NonFinite,
                  "row " + std::to_string(i + 1) + ": treatment is not finite");
    }
    if (a != 0.0 && a != 1.0) {
      throw Error(Errc::NonBinaryTreatment,
                  "row " + std::to_string(i + 1) + ": treatment value " +
                      format_double(a) + " is not 0/1");
    }
    A[i] = static_cast<int>(a);
    Y[i] = row[ycol];
    for (Index j = 0; j < p; ++j) X(i, j) = row[xcols[static_cast<std::size_t>(j)]];
  }
  return SourceSample(std::move(X), std::move(A), std::move(Y));
}

SourceSample read_sample(const std::filesystem::path& path) {
  return validate_dataset(read_csv(path));
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_sample_csv(const SourceSample& sample) {
  std::string out = "y,a";
  for (Index j = 0; j < sample.p(); ++j) out += ",x" + std::to_string(j + 1);
  out += '\n';
  for (Index i = 0; i < sample.n(); ++i) {
    out += format_double(sample.Y()[i]);
    out += ',';
    out += std::to_string(sample.A()[i]);
    for (Index j = 0; j < sample.p(); ++j) {
      out += ',';
      out += format_double(sample.X()(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace calitr
