#include "calitr/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "calitr/dataset.hpp"
#include "calitr/error.hpp"

namespace calitr {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::MissingFile, "cannot write " + path.string());
  out << text;
}

json round_significant(const json& j, int digits) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::strtod(buf, nullptr);
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(round_significant(e, digits));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_significant(it.value(), digits);
    return out;
  }
  return j;
}

std::string canonical_dump(const json& j) {
  return round_significant(j).dump(2) + "\n";
}

std::string format_g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_dump(config))));
  return buf;
}

json provenance(std::string_view command, std::uint64_t seed, const json& config) {
  json p;
  p["tool"] = kToolName;
  p["version"] = kToolVersion;
  p["command"] = command;
  p["seed"] = seed;
  p["config_hash"] = config_hash(config);
  return p;
}

std::string provenance_line(const json& prov) {
  return "# " + round_significant(prov).dump() + "\n";
}

namespace {

int get_index(const json& m, const char* key) {
  if (!m.contains(key) || !m[key].is_number_integer()) {
    throw Error(Errc::ParseError, std::string("moment needs integer field '") + key + "'");
  }
  return m[key].get<int>();
}

}  // namespace

ConstraintSpec constraint_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("moments") || !j["moments"].is_array() ||
      !j.contains("targets") || !j["targets"].is_array()) {
    throw Error(Errc::ParseError, "constraint spec needs 'moments' and 'targets' arrays");
  }
  ConstraintSpec spec;
  for (const auto& m : j["moments"]) {
    if (!m.is_object() || !m.contains("kind") || !m["kind"].is_string()) {
      throw Error(Errc::ParseError, "moment needs a string 'kind'");
    }
    const std::string kind = m["kind"].get<std::string>();
    if (kind == "mean") {
      spec.moments.push_back(Moment::mean(get_index(m, "index")));
    } else if (kind == "mean2") {
      spec.moments.push_back(Moment::mean2(get_index(m, "index")));
    } else if (kind == "cross") {
      spec.moments.push_back(Moment::cross(get_index(m, "i"), get_index(m, "j")));
    } else {
      throw Error(Errc::UnsupportedMoment, "unsupported moment kind '" + kind + "'");
    }
  }
  const auto& t = j["targets"];
  spec.targets.resize(static_cast<Index>(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!t[k].is_number()) throw Error(Errc::ParseError, "targets must be numbers");
    spec.targets[static_cast<Index>(k)] = t[k].get<double>();
  }
  return spec;
}

json to_json(const ConstraintSpec& spec) {
  json ms = json::array();
  for (const auto& m : spec.moments) {
    switch (m.kind) {
      case MomentKind::Mean: ms.push_back({{"kind", "mean"}, {"index", m.i}}); break;
      case MomentKind::Mean2: ms.push_back({{"kind", "mean2"}, {"index", m.i}}); break;
      case MomentKind::Cross: ms.push_back({{"kind", "cross"}, {"i", m.i}, {"j", m.j}}); break;
    }
  }
  return {{"moments", ms},
          {"targets", std::vector<double>(spec.targets.data(), spec.targets.data() + spec.targets.size())}};
}

ConstraintSpec read_constraint_spec(const std::filesystem::path& path) {
  return constraint_spec_from_json(read_json(path));
}

json rule_to_json(const LinearRule& rule, double value, double se) {
  const Vector& b = rule.beta();
  return {{"beta", std::vector<double>(b.data(), b.data() + b.size())}, {"value", value}, {"se", se}};
}

LinearRule rule_from_json(const json& j) {
  if (!j.is_object() || !j.contains("beta") || !j["beta"].is_array() || j["beta"].empty()) {
    throw Error(Errc::ParseError, "rule needs a non-empty 'beta' array");
  }
  Vector b(static_cast<Index>(j["beta"].size()));
  for (std::size_t k = 0; k < j["beta"].size(); ++k) {
    if (!j["beta"][k].is_number()) throw Error(Errc::ParseError, "beta entries must be numbers");
    b[static_cast<Index>(k)] = j["beta"][k].get<double>();
  }
  return LinearRule(b);
}

std::string weights_csv(const WeightSolution& ws) {
  std::string out = "i,weight,W\n";
  for (Index i = 0; i < ws.n(); ++i) {
    out += std::to_string(i + 1) + "," + format_g12(ws.weights[i]) + "," + format_g12(ws.W[i]) + "\n";
  }
  return out;
}

Vector read_weights(const std::filesystem::path& path) {
  const RawTable t = read_csv(path);
  std::size_t col = t.header.size();
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] == "weight") col = k;
  }
  if (col == t.header.size()) throw Error(Errc::MissingColumn, path.string() + ": no 'weight' column");
  Vector w(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) w[static_cast<Index>(i)] = t.rows[i][col];
  return w;
}

json weight_diagnostics(const WeightSolution& ws) {
  json j;
  j["gamma"] = ws.gamma;
  j["lambda"] = std::vector<double>(ws.lambda_hat.data(), ws.lambda_hat.data() + ws.lambda_hat.size());
  j["residual"] = ws.residual;
  j["iterations"] = ws.iterations;
  j["n"] = ws.n();
  j["feasible"] = ws.feasible;
  j["has_negative"] = ws.has_negative;
  j["stabilized"] = ws.stabilized;
  j["renormalized"] = ws.renormalized;
  j["a_n"] = ws.a_n ? json(*ws.a_n) : json(nullptr);
  j["max_weight"] = ws.weights.maxCoeff();
  j["min_weight"] = ws.weights.minCoeff();
  return j;
}

}  // namespace calitr
