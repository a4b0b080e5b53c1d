#include "torvac/experiments.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "torvac/coupling.hpp"
#include "torvac/rng.hpp"

#ifndef TORVAC_GIT_HASH
#define TORVAC_GIT_HASH "unknown"
#endif

namespace torvac {

using nlohmann::json;

const char* build_git_hash() { return TORVAC_GIT_HASH; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t point) {
  return derive_stream_key(seed, (1ULL << 32) + point);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

json param(const char* type, json def, const char* doc, json min = nullptr, json max = nullptr) {
  json p = {{"type", type}, {"default", std::move(def)}, {"doc", doc}};
  if (!min.is_null()) p["min"] = std::move(min);
  if (!max.is_null()) p["max"] = std::move(max);
  return p;
}

json build_schema() {
  json s;
  const json dim = param("int", 3, "torus dimension", 3, 8);
  s["survival"] = {
      {"d", dim},
      {"N", param("int", 60, "torus side", 2, 1 << 20)},
      {"u", param("number_list", json::array({0.5, 1.0, 2.0, 4.0}), "time parameters u (t = floor(u N^d))", 0.0)},
      {"replicas", param("int", 20, "replicas per u", 1, 1000000)},
  };
  s["scan-u"] = {
      {"d", param("int", 4, "torus dimension", 3, 8)},
      {"N", param("int", 40, "torus side", 4, 1 << 20)},
      {"u", param("number_list", json::array({0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0}),
                  "time parameters u", 0.0)},
      {"replicas", param("int", 10, "replicas", 1, 1000000)},
      {"K", param("number", 1.0, "run-length parameter for V, U, C and the giant marker", 0.0)},
      {"beta", param("number", 0.5, "window exponent of V", 0.0, 1.0)},
      {"probe_spacing", param("int", 0, "spacing of the C probe lattice (0: max(1, N / 8))", 0)},
      {"level", param("number", 0.05, "largest-component fraction defining the crossing", 0.0, 1.0)},
  };
  s["segments"] = {
      {"d", param("int", 4, "torus dimension", 3, 8)},
      {"N", param("int_list", json::array({20, 30, 40}), "torus sides", 4)},
      {"u", param("number_list", json::array({0.3, 6.0}), "time parameters u", 0.0)},
      {"K", param("number_list", json::array({0.5}), "segment parameters K", 0.0)},
      {"beta", param("number", 0.97, "window exponent of V", 0.0, 1.0)},
      {"run_factor", param("number", 2.0, "long-run threshold c: runs of length >= c ln N", 0.0)},
      {"replicas", param("int", 20, "replicas per N", 1, 1000000)},
  };
  s["largest-ball"] = {
      {"d", dim},
      {"N", param("int_list", json::array({32, 64, 128}), "torus sides", 2)},
      {"u", param("number", 1.0, "time parameter u", 0.0)},
      {"replicas", param("int", 20, "replicas per N", 1, 1000000)},
  };
  s["excursions"] = {
      {"d", dim},
      {"N", param("int", 170, "torus side", 8, 1 << 20)},
      {"u", param("number_list", json::array({0.5, 1.0, 2.0, 4.0}), "checkpoints u", 0.0)},
      {"L", param("int_list", json::array({2, 4, 8}), "probe core radii", 0)},
      {"r", param("int", 80, "probe halo radius", 1)},
      {"replicas", param("int", 50, "replicas", 1, 1000000)},
  };
  s["coupling"] = {
      {"d", dim},
      {"L", param("int", 2, "core radius", 0, 64)},
      {"r", param("int_list", json::array({20, 40, 80}), "halo radii", 1)},
      {"n", param("int", 100000, "excursions per r and Q samples", 1)},
      {"axis", param("string", "trace", "summary axis: entry, trace or joint")},
      {"profile_samples", param("int", 200000, "harmonic-measure samples per orbit", 1)},
      {"q_escape_radius", param("int", 0, "escape radius of the Q sampler (0: max(64 L, 32 max r))", 0)},
      {"bootstrap", param("int", 200, "bootstrap replicates", 0, 100000)},
  };
  s["constants"] = {
      {"d", param("int_list", json::array({5, 6, 7, 8, 10, 20, 50, 100, 200, 500, 1000}), "dimensions", 5)},
      {"search_limit", param("int", 1000, "largest d searched for d0", 5, 100000)},
      {"tolerance", param("number", 1e-12, "quadrature tolerance", 1e-15, 1e-3)},
  };
  s["qnu"] = {
      {"nu", param("int_list", json::array({3, 4, 5, 6, 7}), "dimensions with a Monte Carlo comparison", 3, 8)},
      {"samples", param("int", 100000, "Monte Carlo walks per nu", 1)},
      {"escape_radius", param("int", 0, "escape radius (0: 1024 for nu = 3, 256 for nu = 4, 64 above)", 0)},
      {"large_nu", param("int_list", json::array({50, 100, 200}), "quadrature-only dimensions", 3)},
      {"k_sigma", param("number", 3.0, "agreement width in standard errors", 0.0)},
      {"qn_d", param("int", 5, "d of the finite-torus return probability", 4, 11)},
      {"qn_m", param("int", 2, "m of the finite-torus return probability", 1)},
      {"qn_N", param("int_list", json::array({8, 16, 32, 64}), "torus sides for q_N", 2)},
      {"qn_samples", param("int", 200000, "Monte Carlo walks per q_N", 1)},
  };
  s["coverage"] = {
      {"d", param("int", 4, "torus dimension", 3, 8)},
      {"N", param("int", 20, "torus side", 2, 1 << 20)},
      {"u", param("number", 0.5, "time parameter u", 0.0)},
      {"sizes", param("int_list", json::array({1, 2, 3, 4}), "sizes of the collinear sets A", 1)},
      {"replicas", param("int", 200, "replicas per set", 1, 1000000)},
      {"mode", param("string", "translation_average", "translation_average or fixed_set")},
  };
  s["variance"] = {
      {"d", dim},
      {"N", param("int", 200, "torus side", 2, 1 << 20)},
      {"L", param("int", 2, "box radius of the local function", 0)},
      {"u", param("number", 1.0, "time parameter u", 0.0)},
      {"r", param("int", 0, "halo radius of the probes (0: minimizer of the budget)", 0)},
      {"ell_star", param("int", 0, "excursion index (0: mean completed count in replica 0)", 0)},
      {"replicas", param("int", 0, "replicas for the empirical variance (0: budget only)", 0, 1000000)},
  };
  s["validate"] = {
      {"cases", param("int", 200, "randomized brute-force cases", 1, 1000000)},
      {"grid", param("string", "", "grid file to load and check before the suite")},
  };
  return s;
}

bool is_int(const json& v) { return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()); }

json check_scalar(const std::string& where, const std::string& type, const json& spec, const json& v) {
  json out;
  if (type == "int") {
    if (!v.is_number() || !is_int(v)) throw ConfigError(where + ": expected an integer");
    out = v.get<std::int64_t>();
  } else if (type == "number") {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + ": expected a finite number");
    out = x;
  } else {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v;
  }
  const double x = out.get<double>();
  if (spec.contains("min") && x < spec["min"].get<double>())
    throw ConfigError(where + ": below minimum " + spec["min"].dump());
  if (spec.contains("max") && x > spec["max"].get<double>())
    throw ConfigError(where + ": above maximum " + spec["max"].dump());
  return out;
}

json check_value(const std::string& where, const json& spec, const json& v) {
  const std::string type = spec["type"];
  if (type.ends_with("_list")) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a nonempty list");
    json out = json::array();
    const std::string elem = type.substr(0, type.size() - 5);
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(check_scalar(where + "[" + std::to_string(i) + "]", elem, spec, v[i]));
    return out;
  }
  return check_scalar(where, type, spec, v);
}

}  // namespace

const json& config_schema() {
  static const json schema = build_schema();
  return schema;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"survival",   "scan-u",    "segments", "largest-ball",
                                                 "excursions", "coupling",  "constants", "qnu",
                                                 "coverage",   "variance",  "validate"};
  return names;
}

std::uint64_t ExperimentConfig::hash() const {
  const json canon = {{"format_version", kRunFormatVersion}, {"command", command}, {"params", params}, {"seed", seed}};
  return fnv1a64(canon.dump());
}

json ExperimentConfig::resolved() const {
  return {{"format_version", kRunFormatVersion},
          {"seed_derivation_version", kSeedDerivationVersion},
          {"command", command},
          {"params", params},
          {"seed", seed},
          {"jobs", jobs},
          {"out", out_dir},
          {"config_hash", hex64(hash())}};
}

ExperimentConfig make_config(const std::string& command, const json& doc, const ConfigOverrides& ov) {
  const json& schema = config_schema();
  if (!schema.contains(command)) throw ConfigError("unknown command '" + command + "'");
  if (!doc.is_null() && !doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> top = {"command", "seed", "jobs", "out", "params"};
  ExperimentConfig cfg;
  cfg.command = command;
  if (doc.is_object()) {
    for (const auto& [k, v] : doc.items())
      if (std::find(top.begin(), top.end(), k) == top.end()) throw ConfigError("unknown config key '" + k + "'");
    if (doc.contains("command") && doc["command"] != command)
      throw ConfigError("config is for command '" + doc["command"].get<std::string>() + "', not '" + command + "'");
    if (doc.contains("seed")) {
      if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0))
        throw ConfigError("seed: expected a nonnegative integer");
      cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("jobs")) cfg.jobs = static_cast<int>(check_scalar("jobs", "int", {{"min", 0}, {"max", 4096}}, doc["jobs"]).get<std::int64_t>());
    if (doc.contains("out")) {
      if (!doc["out"].is_string()) throw ConfigError("out: expected a string");
      cfg.out_dir = doc["out"];
    }
  }
  const json& spec = schema[command];
  json given = doc.is_object() && doc.contains("params") ? doc["params"] : json::object();
  if (!given.is_object()) throw ConfigError("params must be an object");
  for (const auto& [k, v] : given.items())
    if (!spec.contains(k)) throw ConfigError("unknown parameter '" + k + "' for " + command);
  cfg.params = json::object();
  for (const auto& [k, p] : spec.items())
    cfg.params[k] = check_value(command + "." + k, p, given.contains(k) ? given[k] : p["default"]);
  if (command == "coupling") (void)parse_axis(cfg.params["axis"]);
  if (command == "coverage") {
    const std::string m = cfg.params["mode"];
    if (m != "translation_average" && m != "fixed_set") throw ConfigError("coverage.mode: unknown mode '" + m + "'");
  }
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.jobs) {
    if (*ov.jobs < 0) throw ConfigError("jobs must be >= 0");
    cfg.jobs = *ov.jobs;
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  return cfg;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw std::logic_error("row width does not match the table");
  rows_.push_back(std::move(cells));
}

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

const std::string& Table::cell(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns_.begin(), columns_.end(), column);
  if (it == columns_.end()) throw std::out_of_range("no column '" + column + "'");
  return rows_.at(row)[static_cast<std::size_t>(it - columns_.begin())];
}

double Table::number(std::size_t row, const std::string& column) const {
  const std::string& c = cell(row, column);
  if (c.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(c);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

json RunRecord::to_json() const {
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  return {{"config_hash", hex64(config_hash)}, {"replica_index", replica_index}, {"metrics", m},
          {"wall_seconds", wall_seconds}};
}

std::vector<RunRecord> run_replicas(std::uint64_t config_hash, std::size_t count, int jobs,
                                    const std::function<void(std::size_t, RunRecord&)>& body) {
  std::vector<RunRecord> recs(count);
  std::exception_ptr error;
  std::mutex error_mu;
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    auto& rec = recs[static_cast<std::size_t>(i)];
    rec.config_hash = config_hash;
    rec.replica_index = static_cast<std::uint64_t>(i);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(static_cast<std::size_t>(i), rec);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  if (error) std::rethrow_exception(error);
  return recs;
}

CommandResult run_command(const ExperimentConfig& cfg) {
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
  const std::string& c = cfg.command;
  CommandResult r;
  if (c == "survival") r = cmd_survival(cfg);
  else if (c == "scan-u") r = cmd_scan_u(cfg);
  else if (c == "segments") r = cmd_segments(cfg);
  else if (c == "largest-ball") r = cmd_largest_ball(cfg);
  else if (c == "excursions") r = cmd_excursions(cfg);
  else if (c == "coupling") r = cmd_coupling(cfg);
  else if (c == "constants") r = cmd_constants(cfg);
  else if (c == "qnu") r = cmd_qnu(cfg);
  else if (c == "coverage") r = cmd_coverage(cfg);
  else if (c == "variance") r = cmd_variance(cfg);
  else if (c == "validate") r = cmd_validate(cfg);
  else throw ConfigError("unknown command '" + c + "'");
  r.command = c;
  return r;
}

void write_outputs(const ExperimentConfig& cfg, const CommandResult& result) {
  if (cfg.out_dir.empty()) return;
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << body;
  };
  write(cfg.command + ".csv", result.table.to_csv());
  std::string nd;
  for (const auto& rec : result.records) {
    json j = rec.to_json();
    j["command"] = cfg.command;
    nd += j.dump();
    nd += '\n';
  }
  write(cfg.command + ".ndjson", nd);
  json meta = {{"format_version", kRunFormatVersion},
               {"seed_derivation_version", kSeedDerivationVersion},
               {"git_hash", build_git_hash()},
               {"config", cfg.resolved()},
               {"summary", result.summary},
               {"failures", result.failures},
               {"exit_code", result.exit_code()}};
  write(cfg.command + ".meta.json", meta.dump(2) + "\n");
}

double VarianceBudget::at(int r) const {
  return std::pow(static_cast<double>(r) / N, d) + u * std::pow(static_cast<double>(L), d) / r;
}

VarianceBudget variance_budget(int d, double u, int L, int N) {
  if (d < 1 || L < 0 || N < 1 || !(u >= 0)) throw ConfigError("variance budget: invalid parameters");
  VarianceBudget b;
  b.d = d;
  b.u = u;
  b.L = L;
  b.N = N;
  b.r_min = std::max(1, 10 * L);
  b.r_max = N / 10;
  if (b.r_min > b.r_max)
    throw ConfigError("variance budget: empty range 10 L <= r <= N / 10 (L = " + std::to_string(L) +
                      ", N = " + std::to_string(N) + ")");
  b.value = std::numeric_limits<double>::infinity();
  for (int r = b.r_min; r <= b.r_max; ++r) {
    const double v = b.at(r);
    if (v < b.value) {
      b.value = v;
      b.r_best = r;
    }
  }
  return b;
}

}  // namespace torvac
