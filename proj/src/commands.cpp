#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "torvac/coupling.hpp"
#include "torvac/experiments.hpp"
#include "torvac/potential.hpp"
#include "torvac/stats.hpp"

namespace torvac {

using nlohmann::json;

namespace {

template <class T>
std::vector<T> list(const json& p, const char* key) {
  return p.at(key).get<std::vector<T>>();
}

std::string hash_cell(const ExperimentConfig& cfg) { return hex64(cfg.hash()); }

void check_v_window(int N, double K, double beta) {
  const int l = log_length(K, N);
  const int window = static_cast<int>(std::floor(std::pow(static_cast<double>(N), beta) + 1e-12));
  if (l + window + 1 > N)
    throw ConfigError("V window does not fit at N = " + std::to_string(N) + ": floor(K ln N) + floor(N^beta) + 1 > N");
}

void check_c_radius(int N, double K) {
  if (2 * log_length(K, N) + 1 > N) throw ConfigError("C radius does not fit: 2 floor(K ln N) + 1 > N");
}

json fit_json(const stats::LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2},
          {"slope_se", f.slope_se}, {"intercept_se", f.intercept_se}, {"n", f.n}};
}

std::vector<std::uint64_t> times_for(const TorusGeometry& g, const std::vector<double>& us) {
  std::vector<std::uint64_t> ts;
  for (double u : us) ts.push_back(WalkConfig::steps_for(g, u));
  return ts;
}

void merge_failures(CommandResult& res, const std::vector<std::vector<std::string>>& per_replica) {
  for (const auto& v : per_replica) res.failures.insert(res.failures.end(), v.begin(), v.end());
}

}  // namespace

CommandResult cmd_survival(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const TorusGeometry g(p["d"].get<int>(), p["N"].get<int>());
  const auto us = list<double>(p, "u");
  const auto R = p["replicas"].get<std::size_t>();
  const auto ts = times_for(g, us);
  const double umax = *std::max_element(us.begin(), us.end());

  std::vector<std::vector<double>> frac(us.size(), std::vector<double>(R));
  CommandResult res;
  res.records = run_replicas(cfg.hash(), R, cfg.jobs, [&](std::size_t i, RunRecord& rec) {
    const OccupancyGrid grid = run_walk(WalkConfig{g, umax, std::nullopt, point_seed(cfg.seed, 0), i});
    for (std::size_t k = 0; k < us.size(); ++k) {
      frac[k][i] = vacant_fraction(grid, ts[k]);
      rec.metrics.emplace_back("vacant_fraction@u=" + fmt(us[k]), frac[k][i]);
    }
  });

  res.table = Table({"u", "t", "replicas", "mean", "sd", "ci_lo", "ci_hi", "rel_sd", "config_hash"});
  std::vector<double> fx, fy;
  const double cells = static_cast<double>(g.cell_count());
  for (std::size_t k = 0; k < us.size(); ++k) {
    const auto s = stats::summarize(frac[k]);
    const auto ci = stats::mean_interval(s);
    res.table.add_row({fmt(us[k]), fmt(ts[k]), fmt(static_cast<std::uint64_t>(R)), fmt(s.mean), fmt(s.sd), fmt(ci.lo),
                       fmt(ci.hi), fmt(s.mean > 0 ? s.sd / s.mean : 0.0), hash_cell(cfg)});
    if (ts[k] == 0)
      for (double f : frac[k])
        if (f != (cells - 1.0) / cells) res.failures.push_back("survival: t = 0 vacant fraction " + fmt(f) + " != (N^d - 1) / N^d");
    if (s.mean > 0) {
      fx.push_back(us[k]);
      fy.push_back(std::log(s.mean));
    }
  }
  if (fx.size() >= 2) res.summary["log_mean_vs_u"] = fit_json(stats::fit_line(fx, fy));
  return res;
}

CommandResult cmd_scan_u(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const TorusGeometry g(p["d"].get<int>(), p["N"].get<int>());
  auto us = list<double>(p, "u");
  std::sort(us.begin(), us.end());
  const auto R = p["replicas"].get<std::size_t>();
  const double K = p["K"], beta = p["beta"], level = p["level"];
  const int spacing = p["probe_spacing"].get<int>() > 0 ? p["probe_spacing"].get<int>() : std::max(1, g.side() / 8);
  check_v_window(g.side(), K, beta);
  check_c_radius(g.side(), K);
  const auto ts = times_for(g, us);
  const auto probes = probe_lattice(g, spacing);

  struct Cell {
    double G = 0, giant = 0, C = 0, largest = 0;
  };
  std::vector<std::vector<Cell>> out(us.size(), std::vector<Cell>(R));
  std::vector<std::vector<std::string>> fails(R);
  CommandResult res;
  res.records = run_replicas(cfg.hash(), R, cfg.jobs, [&](std::size_t i, RunRecord& rec) {
    const OccupancyGrid grid = run_walk(WalkConfig{g, us.back(), std::nullopt, point_seed(cfg.seed, 0), i});
    for (std::size_t k = 0; k < us.size(); ++k) {
      const EventReport ev = detect_G(grid, ts[k], K, beta, probes);
      Cell& c = out[k][i];
      c.G = ev.G ? 1.0 : 0.0;
      c.giant = ev.giant_fraction;
      c.C = ev.C_fraction;
      c.largest = ev.largest_fraction;
      const std::string tag = "@u=" + fmt(us[k]);
      rec.metrics.emplace_back("G" + tag, c.G);
      rec.metrics.emplace_back("giant_fraction" + tag, c.giant);
      rec.metrics.emplace_back("C_fraction" + tag, c.C);
      rec.metrics.emplace_back("largest_fraction" + tag, c.largest);
      if (ev.G && !(ev.V.holds && ev.U.holds))
        fails[i].push_back("scan-u: G without V and U at replica " + std::to_string(i) + tag);
      if (ev.G && ev.C_outside_giant > 0)
        fails[i].push_back("scan-u: probe with C outside the giant at replica " + std::to_string(i) + tag);
    }
  });
  merge_failures(res, fails);

  res.table = Table({"u", "t", "replicas", "G_freq", "giant_fraction_mean", "C_fraction_mean", "largest_fraction_mean",
                     "largest_fraction_sd", "largest_fraction_min", "largest_fraction_max", "config_hash"});
  std::vector<double> means;
  for (std::size_t k = 0; k < us.size(); ++k) {
    std::vector<double> G, giant, C, largest;
    for (const Cell& c : out[k]) {
      G.push_back(c.G);
      giant.push_back(c.giant);
      C.push_back(c.C);
      largest.push_back(c.largest);
    }
    const auto sl = stats::summarize(largest);
    means.push_back(sl.mean);
    res.table.add_row({fmt(us[k]), fmt(ts[k]), fmt(static_cast<std::uint64_t>(R)), fmt(stats::summarize(G).mean),
                       fmt(stats::summarize(giant).mean), fmt(stats::summarize(C).mean), fmt(sl.mean), fmt(sl.sd),
                       fmt(*std::min_element(largest.begin(), largest.end())),
                       fmt(*std::max_element(largest.begin(), largest.end())), hash_cell(cfg)});
  }
  // First downward crossing of the level by the mean largest fraction,
  // linearly interpolated in u.
  res.summary["level"] = level;
  res.summary["crossing_u"] = nullptr;
  for (std::size_t k = 0; k < us.size(); ++k) {
    if (means[k] >= level) continue;
    if (k == 0) {
      res.summary["crossing_u"] = us[0];
      res.summary["crossing_note"] = "below the level at the first u";
    } else {
      const double w = (means[k - 1] - level) / (means[k - 1] - means[k]);
      res.summary["crossing_u"] = us[k - 1] + w * (us[k] - us[k - 1]);
    }
    break;
  }
  res.summary["probes"] = probes.size();
  return res;
}

CommandResult cmd_segments(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const int d = p["d"];
  const auto Ns = list<int>(p, "N");
  auto us = list<double>(p, "u");
  const auto Ks = list<double>(p, "K");
  const double beta = p["beta"], factor = p["run_factor"];
  const auto R = p["replicas"].get<std::size_t>();
  for (int N : Ns)
    for (double K : Ks) check_v_window(N, K, beta);
  const double umax = *std::max_element(us.begin(), us.end());

  CommandResult res;
  res.table = Table({"N", "u", "K", "replicas", "V_freq", "longest_run_mean", "long_run_freq", "run_threshold",
                     "config_hash"});
  for (std::size_t pn = 0; pn < Ns.size(); ++pn) {
    const TorusGeometry g(d, Ns[pn]);
    const auto ts = times_for(g, us);
    const double threshold = factor * std::log(static_cast<double>(Ns[pn]));
    // [u][K][replica] V flags; [u][replica] longest run length.
    std::vector<std::vector<std::vector<double>>> V(us.size(), std::vector<std::vector<double>>(Ks.size(), std::vector<double>(R)));
    std::vector<std::vector<double>> run(us.size(), std::vector<double>(R));
    auto recs = run_replicas(cfg.hash(), R, cfg.jobs, [&](std::size_t i, RunRecord& rec) {
      const OccupancyGrid grid = run_walk(WalkConfig{g, umax, std::nullopt, point_seed(cfg.seed, pn), i});
      for (std::size_t k = 0; k < us.size(); ++k) {
        const auto mask = vacancy_mask(grid, ts[k], false);
        run[k][i] = std::max(0, longest_vacant_run(grid, ts[k]) - 1);
        const std::string tag = "@N=" + std::to_string(Ns[pn]) + ",u=" + fmt(us[k]);
        rec.metrics.emplace_back("longest_run" + tag, run[k][i]);
        for (std::size_t kk = 0; kk < Ks.size(); ++kk) {
          V[k][kk][i] = detect_V_mask(g, mask, Ks[kk], beta).holds ? 1.0 : 0.0;
          rec.metrics.emplace_back("V" + tag + ",K=" + fmt(Ks[kk]), V[k][kk][i]);
        }
      }
    });
    // Replica indices restart per N; keep (hash, index) unique in the file.
    for (auto& r : recs) r.replica_index += pn * R;
    res.records.insert(res.records.end(), recs.begin(), recs.end());
    for (std::size_t k = 0; k < us.size(); ++k) {
      double long_runs = 0;
      for (double l : run[k]) long_runs += l >= threshold ? 1.0 : 0.0;
      for (std::size_t kk = 0; kk < Ks.size(); ++kk)
        res.table.add_row({fmt(Ns[pn]), fmt(us[k]), fmt(Ks[kk]), fmt(static_cast<std::uint64_t>(R)),
                           fmt(stats::summarize(V[k][kk]).mean), fmt(stats::summarize(run[k]).mean),
                           fmt(long_runs / static_cast<double>(R)), fmt(threshold), hash_cell(cfg)});
    }
  }
  return res;
}

CommandResult cmd_largest_ball(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const int d = p["d"];
  const auto Ns = list<int>(p, "N");
  const double u = p["u"];
  const auto R = p["replicas"].get<std::size_t>();
  for (int N : Ns) (void)WalkConfig::steps_for(TorusGeometry(d, N), u);

  CommandResult res;
  res.table = Table({"N", "u", "replicas", "mean", "sd", "ci_lo", "ci_hi", "config_hash"});
  std::vector<double> lx, ly, means;
  for (std::size_t pn = 0; pn < Ns.size(); ++pn) {
    const TorusGeometry g(d, Ns[pn]);
    std::vector<double> ball(R);
    auto recs = run_replicas(cfg.hash(), R, cfg.jobs, [&](std::size_t i, RunRecord& rec) {
      const OccupancyGrid grid = run_walk(WalkConfig{g, u, std::nullopt, point_seed(cfg.seed, pn), i});
      ball[i] = largest_vacant_ball(grid, grid.total_steps());
      rec.metrics.emplace_back("largest_ball@N=" + std::to_string(Ns[pn]), ball[i]);
    });
    for (auto& r : recs) r.replica_index += pn * R;
    res.records.insert(res.records.end(), recs.begin(), recs.end());
    const auto s = stats::summarize(ball);
    const auto ci = stats::mean_interval(s);
    res.table.add_row({fmt(Ns[pn]), fmt(u), fmt(static_cast<std::uint64_t>(R)), fmt(s.mean), fmt(s.sd), fmt(ci.lo),
                       fmt(ci.hi), hash_cell(cfg)});
    means.push_back(s.mean);
    if (s.mean > 0 && Ns[pn] >= 3) {
      lx.push_back(std::log(std::log(static_cast<double>(Ns[pn]))));
      ly.push_back(std::log(s.mean));
    }
  }
  bool increasing = true;
  for (std::size_t k = 1; k < means.size(); ++k) increasing = increasing && means[k] > means[k - 1];
  res.summary["means_strictly_increasing"] = increasing;
  if (lx.size() >= 2) res.summary["log_mean_vs_log_log_N"] = fit_json(stats::fit_line(lx, ly));
  return res;
}

CommandResult cmd_excursions(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const TorusGeometry g(p["d"].get<int>(), p["N"].get<int>());
  const auto us = list<double>(p, "u");
  const auto Ls = list<int>(p, "L");
  const int r = p["r"];
  const auto R = p["replicas"].get<std::size_t>();
  if (2 * r + 1 > g.side()) throw ConfigError("excursions: the halo B(x, r) must fit the torus (2 r + 1 <= N)");
  for (int L : Ls)
    if (L > r) throw ConfigError("excursions: every L must satisfy L <= r");
  (void)times_for(g, us);
  const TorusPoint x = TorusPoint::from_coords(g, Coords{});

  // [u][replica] macro counts, [L][u][replica] probe counts.
  std::vector<std::vector<double>> macro(us.size(), std::vector<double>(R)), macro_ret(us.size(), std::vector<double>(R));
  std::vector<std::vector<std::vector<double>>> probe(Ls.size(), std::vector<std::vector<double>>(us.size(), std::vector<double>(R)));
  std::vector<std::vector<std::vector<double>>> probe_ret = probe;
  int macro_in = 0, macro_out = 0;
  CommandResult res;
  res.records = run_replicas(cfg.hash(), R, cfg.jobs, [&](std::size_t i, RunRecord& rec) {
    const WalkConfig wc{g, *std::max_element(us.begin(), us.end()), std::nullopt, point_seed(cfg.seed, 0), i};
    for (std::size_t l = 0; l < Ls.size(); ++l) {
      const BoxExcursionCounts c = count_box_excursions(wc, x, Ls[l], r, us);
      for (std::size_t k = 0; k < us.size(); ++k) {
        if (l == 0) {
          macro[k][i] = static_cast<double>(c.macro_completed[k]);
          macro_ret[k][i] = static_cast<double>(c.macro_returns[k]);
          rec.metrics.emplace_back("macro_completed@u=" + fmt(us[k]), macro[k][i]);
        }
        probe[l][k][i] = static_cast<double>(c.probe_completed[k]);
        probe_ret[l][k][i] = static_cast<double>(c.probe_returns[k]);
        rec.metrics.emplace_back("probe_completed@L=" + std::to_string(Ls[l]) + ",u=" + fmt(us[k]), probe[l][k][i]);
      }
      if (i == 0 && l == 0) {
        macro_in = c.macro_inner_radius;
        macro_out = c.macro_outer_radius;
      }
    }
  });

  res.table = Table({"kind", "inner_radius", "outer_radius", "u", "replicas", "completed_mean", "completed_sd",
                     "completed_sem", "returns_mean", "config_hash"});
  std::vector<double> mu_x, mu_y;
  for (std::size_t k = 0; k < us.size(); ++k) {
    const auto s = stats::summarize(macro[k]);
    res.table.add_row({"macro", fmt(macro_in), fmt(macro_out), fmt(us[k]), fmt(static_cast<std::uint64_t>(R)), fmt(s.mean),
                       fmt(s.sd), fmt(s.sem), fmt(stats::summarize(macro_ret[k]).mean), hash_cell(cfg)});
    mu_x.push_back(us[k]);
    mu_y.push_back(s.mean);
  }
  std::vector<double> lx, ly;
  std::size_t kmax = static_cast<std::size_t>(std::max_element(us.begin(), us.end()) - us.begin());
  for (std::size_t l = 0; l < Ls.size(); ++l)
    for (std::size_t k = 0; k < us.size(); ++k) {
      const auto s = stats::summarize(probe[l][k]);
      res.table.add_row({"probe", fmt(Ls[l]), fmt(r), fmt(us[k]), fmt(static_cast<std::uint64_t>(R)), fmt(s.mean), fmt(s.sd),
                         fmt(s.sem), fmt(stats::summarize(probe_ret[l][k]).mean), hash_cell(cfg)});
      if (k == kmax && Ls[l] >= 1 && s.mean > 0) {
        lx.push_back(std::log(static_cast<double>(Ls[l])));
        ly.push_back(std::log(s.mean));
      }
    }
  if (mu_x.size() >= 2) {
    const auto f = stats::fit_line(mu_x, mu_y);
    json j = fit_json(f);
    if (f.n >= 3) {
      const auto ci = f.intercept_interval();
      j["intercept_ci"] = {ci.lo, ci.hi};
      j["intercept_ci_contains_0"] = ci.contains(0.0);
    }
    res.summary["macro_mean_vs_u"] = j;
  }
  if (lx.size() >= 2) {
    json j = fit_json(stats::fit_line(lx, ly));
    j["target_exponent"] = g.dim() - 2;
    j["at_u"] = us[kmax];
    res.summary["probe_log_mean_vs_log_L"] = j;
  }
  return res;
}

CommandResult cmd_coupling(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  TvStudyOptions opt;
  opt.d = p["d"];
  opt.L = p["L"];
  opt.r_values = list<int>(p, "r");
  opt.n = p["n"];
  opt.axis = parse_axis(p["axis"]);
  opt.profile_samples = p["profile_samples"];
  opt.q_escape_radius = p["q_escape_radius"];
  opt.bootstrap_reps = p["bootstrap"];
  opt.seed = cfg.seed;
  for (int r : opt.r_values)
    CouplingGeometry::standard(opt.d, opt.L, r, CouplingGeometry::default_N(r)).validate();

  const auto rows = tv_scaling_study(opt);
  CommandResult res;
  res.table = Table({"L", "r", "N", "n", "tv_raw", "tv_corrected", "ci_lo", "ci_hi", "q_bias_bound", "config_hash"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    res.table.add_row({fmt(r.L), fmt(r.r), fmt(r.N), fmt(r.n), fmt(r.tv.raw), fmt(r.tv.bias_corrected), fmt(r.tv.ci.lo),
                       fmt(r.tv.ci.hi), fmt(r.q_bias_bound), hash_cell(cfg)});
    RunRecord rec;
    rec.config_hash = cfg.hash();
    rec.replica_index = k;
    rec.metrics = {{"r", r.r}, {"tv_raw", r.tv.raw}, {"tv_corrected", r.tv.bias_corrected}};
    res.records.push_back(rec);
    if (!(r.tv.raw >= 0.0 && r.tv.raw <= 2.0)) res.failures.push_back("coupling: raw distance outside [0, 2]");
  }
  res.summary["axis"] = to_string(opt.axis);
  res.summary["convention"] = "sum |p - q| (no 1/2)";
  return res;
}

CommandResult cmd_constants(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto ds = list<int>(p, "d");
  const int limit = p["search_limit"];
  const double tol = p["tolerance"];
  const ConstantsReport rep = constants_report(ds, limit, tol);
  const ConstantsReport half = constants_report({}, limit, tol / 2.0);

  CommandResult res;
  res.table = Table({"d", "q", "q_error", "mu", "mu_lo", "mu_hi", "lambda0", "c0", "config_hash"});
  for (const auto& r : rep.rows)
    res.table.add_row({fmt(r.d), fmt(r.q), fmt(r.q_error), fmt(r.mu), fmt(r.mu_lo), fmt(r.mu_hi),
                       r.lambda0 ? fmt(*r.lambda0) : "", r.c0 ? fmt(*r.c0) : "", hash_cell(cfg)});
  auto opt = [](const std::optional<int>& v) -> json { return v ? json(*v) : json(nullptr); };
  res.summary["d0_lo"] = opt(rep.d0_lo);
  res.summary["d0_hi"] = opt(rep.d0_hi);
  res.summary["d0_lo_half_tolerance"] = opt(half.d0_lo);
  res.summary["d0_hi_half_tolerance"] = opt(half.d0_hi);
  res.summary["d0_stable"] = rep.d0_lo == half.d0_lo && rep.d0_hi == half.d0_hi;
  return res;
}

CommandResult cmd_qnu(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto nus = list<int>(p, "nu");
  const auto large = list<int>(p, "large_nu");
  const auto samples = p["samples"].get<std::uint64_t>();
  const int radius = p["escape_radius"];
  const double k = p["k_sigma"];
  const int qd = p["qn_d"], qm = p["qn_m"];
  const auto qNs = list<int>(p, "qn_N");
  if (qm > qd - 3) throw ConfigError("qnu: need 1 <= qn_m <= qn_d - 3");

  CommandResult res;
  res.table = Table({"nu", "value", "error", "method", "bias_bound", "agree", "scaled_deviation", "exact", "config_hash"});
  bool all_agree = true;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    const int nu = nus[i];
    const auto quad = q_nu_quadrature(nu);
    const int R = radius > 0 ? radius : (nu == 3 ? 1024 : nu == 4 ? 256 : 64);
    const auto mc = q_nu_montecarlo(nu, R, samples, point_seed(cfg.seed, i));
    const bool agree = return_values_agree(quad, mc, k);
    all_agree = all_agree && agree;
    res.table.add_row({fmt(nu), fmt(quad.value), fmt(quad.error), "quadrature", "", "", fmt(std::abs(quad.value * 2.0 * nu - 1.0)), "", hash_cell(cfg)});
    res.table.add_row({fmt(nu), fmt(mc.value), fmt(mc.sigma), "montecarlo:R=" + std::to_string(R), fmt(mc.bias_bound),
                       agree ? "1" : "0", "", "", hash_cell(cfg)});
    RunRecord rec;
    rec.config_hash = cfg.hash();
    rec.replica_index = i;
    rec.metrics = {{"nu", nu}, {"quadrature", quad.value}, {"montecarlo", mc.value}, {"sigma", mc.sigma}};
    res.records.push_back(rec);
  }
  std::vector<double> dev;
  for (int nu : large) {
    const auto quad = q_nu_quadrature(nu);
    dev.push_back(std::abs(quad.value * 2.0 * nu - 1.0));
    res.table.add_row({fmt(nu), fmt(quad.value), fmt(quad.error), "quadrature", "", "", fmt(dev.back()), "", hash_cell(cfg)});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < dev.size(); ++i) decreasing = decreasing && dev[i] < dev[i - 1];
  json qn = json::array();
  for (std::size_t i = 0; i < qNs.size(); ++i) {
    const auto fr = q_N_finite(qd, qm, qNs[i], p["qn_samples"].get<std::uint64_t>(), point_seed(cfg.seed, 1000 + i));
    res.table.add_row({fmt(qd - qm), fmt(fr.estimate), fmt(0.5 * (fr.ci.hi - fr.ci.lo)), "torus:N=" + std::to_string(qNs[i]),
                       "", "", "", fr.exact ? fmt(*fr.exact) : "", hash_cell(cfg)});
    qn.push_back({{"N", qNs[i]}, {"estimate", fr.estimate}, {"ci", {fr.ci.lo, fr.ci.hi}}});
  }
  res.summary["all_agree"] = all_agree;
  res.summary["large_nu_deviation_decreasing"] = decreasing;
  res.summary["q_N"] = qn;
  res.summary["q_limit"] = q_nu_quadrature(qd - qm).value;
  return res;
}

CommandResult cmd_coverage(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const TorusGeometry g(p["d"].get<int>(), p["N"].get<int>());
  const auto sizes = list<int>(p, "sizes");
  const double u = p["u"];
  const auto R = p["replicas"].get<std::size_t>();
  const CoverageMode mode = p["mode"] == "fixed_set" ? CoverageMode::fixed_set : CoverageMode::translation_average;
  for (int s : sizes)
    if (s > g.side()) throw ConfigError("coverage: set size exceeds N");
  (void)WalkConfig::steps_for(g, u);

  CommandResult res;
  res.table = Table({"size", "estimate", "ci_lo", "ci_hi", "log_estimate", "method", "config_hash"});
  std::vector<double> x, y;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::vector<TorusPoint> A;
    for (int j = 0; j < sizes[k]; ++j) {
      Coords c{};
      c[0] = j;
      A.push_back(TorusPoint::from_coords(g, c));
    }
    const auto est = coverage_probability(g, A, u, R, point_seed(cfg.seed, k), mode);
    const double le = est.estimate > 0 ? std::log(est.estimate) : -std::numeric_limits<double>::infinity();
    res.table.add_row({fmt(sizes[k]), fmt(est.estimate), fmt(est.ci.lo), fmt(est.ci.hi), fmt(le), est.method, hash_cell(cfg)});
    if (est.estimate > 0) {
      x.push_back(sizes[k]);
      y.push_back(le);
    }
    RunRecord rec;
    rec.config_hash = cfg.hash();
    rec.replica_index = k;
    rec.metrics = {{"size", sizes[k]}, {"estimate", est.estimate}};
    res.records.push_back(rec);
  }
  if (x.size() >= 2) res.summary["log_estimate_vs_size"] = fit_json(stats::fit_line(x, y));
  return res;
}

namespace {

// Feeds each probe's tracker only the steps inside its halo plus the first
// step after leaving it; probes sit on a lattice with spacing >= 2 r + 3.
class ProbeTrackers {
 public:
  ProbeTrackers(const TorusGeometry& g, int spacing, int per_axis, int L, int r)
      : g_(&g), spacing_(spacing), per_axis_(per_axis), r_(r) {
    Coords c{};
    const std::size_t count = static_cast<std::size_t>(std::pow(per_axis, g.dim()));
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t rest = i;
      for (int j = g.dim() - 1; j >= 0; --j) {
        c[static_cast<std::size_t>(j)] = static_cast<int>(rest % static_cast<std::size_t>(per_axis)) * spacing;
        rest /= static_cast<std::size_t>(per_axis);
      }
      const TorusPoint x = TorusPoint::from_coords(g, c);
      probes_.push_back(x);
      trackers_.emplace_back(g, std::vector<LinfBox>{make_box(g, x, L)}, std::vector<LinfBox>{make_box(g, x, r)});
    }
    active_ = trackers_.size();
  }

  void observe(std::uint64_t t, const WalkerState& s) {
    const Coords& c = s.coords();
    std::size_t idx = 0;
    bool inside = true;
    for (int j = 0; j < g_->dim(); ++j) {
      const int v = c[static_cast<std::size_t>(j)];
      int k = (v + spacing_ / 2) / spacing_;
      if (k >= per_axis_) k = 0;
      const int off = std::min(std::abs(v - k * spacing_), g_->side() - std::abs(v - k * spacing_));
      inside = inside && off <= r_;
      idx = idx * static_cast<std::size_t>(per_axis_) + static_cast<std::size_t>(k);
    }
    const std::size_t none = trackers_.size();
    const std::size_t now = inside ? idx : none;
    if (active_ != none && active_ != now) trackers_[active_].observe(t, s);
    if (now != none) trackers_[now].observe(t, s);
    active_ = now;
  }

  const std::vector<TorusPoint>& probes() const { return probes_; }
  std::vector<ExcursionSchedule> schedules() const {
    std::vector<ExcursionSchedule> out;
    for (const auto& tr : trackers_) out.push_back(tr.schedule());
    return out;
  }

 private:
  const TorusGeometry* g_;
  int spacing_, per_axis_, r_;
  std::vector<TorusPoint> probes_;
  std::vector<ExcursionTracker> trackers_;
  std::size_t active_ = 0;
};

}  // namespace

CommandResult cmd_variance(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const int d = p["d"], N = p["N"], L = p["L"];
  const double u = p["u"];
  int r = p["r"];
  const auto R = p["replicas"].get<std::size_t>();
  std::optional<VarianceBudget> budget;
  if (r == 0) {
    budget = variance_budget(d, u, L, N);
    r = budget->r_best;
  } else {
    try {
      budget = variance_budget(d, u, L, N);
    } catch (const ConfigError&) {
    }
  }
  if (r < L) throw ConfigError("variance: need r >= L");
  const double at_r = std::pow(static_cast<double>(r) / N, d) + u * std::pow(static_cast<double>(L), d) / r;

  CommandResult res;
  res.summary["admissible_range"] = budget ? json::array({budget->r_min, budget->r_max}) : json(nullptr);
  res.table = Table({"d", "N", "L", "u", "r", "budget_at_r", "budget_min", "r_best", "replicas", "ell_star",
                     "gamma_tilde_mean", "gamma_tilde_var", "var_over_budget", "cov_probe01", "cov_se", "unreached",
                     "config_hash"});
  std::string mean_s, var_s, ratio_s, cov_s, cov_se_s, unreached_s, ell_s;
  if (R > 0) {
    const TorusGeometry g(d, N);
    const int per_axis = N / (2 * r + 3);
    if (per_axis < 2) throw ConfigError("variance: need two probes at distance >= 2 r + 3 (N >= 2 (2 r + 3))");
    const int spacing = N / per_axis;
    const double horizon_u = 2.0 * u;
    const std::uint64_t t = WalkConfig::steps_for(g, u);
    (void)WalkConfig::steps_for(g, horizon_u);
    LocalFunctionSpec spec;
    spec.kind = LocalKind::phi1;
    spec.L = L;
    spec.validate(g);

    auto run_one = [&](std::size_t i, ProbeTrackers& tr) {
      return run_walk(WalkConfig{g, horizon_u, std::nullopt, point_seed(cfg.seed, 0), i}, tr);
    };
    std::size_t ell = p["ell_star"].get<std::size_t>();
    if (ell == 0) {
      ProbeTrackers tr(g, spacing, per_axis, L, r);
      (void)run_one(0, tr);
      double total = 0;
      for (const auto& s : tr.schedules()) total += static_cast<double>(s.completed_by(t));
      ell = std::max<std::size_t>(1, static_cast<std::size_t>(total / static_cast<double>(tr.probes().size())));
    }
    std::vector<double> gt(R), h0(R), h1(R), unreached(R);
    res.records = run_replicas(cfg.hash(), R, cfg.jobs, [&](std::size_t i, RunRecord& rec) {
      ProbeTrackers tr(g, spacing, per_axis, L, r);
      const OccupancyGrid grid = run_one(i, tr);
      const auto sched = tr.schedules();
      const GammaTilde v = gamma_tilde(grid, spec, tr.probes(), sched, ell);
      gt[i] = v.value;
      h0[i] = v.h[0];
      h1[i] = v.h[1];
      unreached[i] = static_cast<double>(v.unreached);
      rec.metrics = {{"gamma_tilde", v.value}, {"h_probe0", v.h[0]}, {"h_probe1", v.h[1]}, {"unreached", unreached[i]}};
    });
    const auto s = stats::summarize(gt);
    const double var = s.sd * s.sd;
    const auto s0 = stats::summarize(h0), s1 = stats::summarize(h1);
    std::vector<double> prod(R);
    for (std::size_t i = 0; i < R; ++i) prod[i] = (h0[i] - s0.mean) * (h1[i] - s1.mean);
    const auto sp = stats::summarize(prod);
    const double cov = R > 1 ? sp.mean * static_cast<double>(R) / static_cast<double>(R - 1) : 0.0;
    mean_s = fmt(s.mean);
    var_s = fmt(var);
    ratio_s = budget ? fmt(var / budget->value) : fmt(var / at_r);
    cov_s = fmt(cov);
    cov_se_s = fmt(sp.sem);
    unreached_s = fmt(std::accumulate(unreached.begin(), unreached.end(), 0.0));
    ell_s = fmt(static_cast<std::uint64_t>(ell));
  }
  res.table.add_row({fmt(d), fmt(N), fmt(L), fmt(u), fmt(r), fmt(at_r), budget ? fmt(budget->value) : "",
                     budget ? fmt(budget->r_best) : "", fmt(static_cast<std::uint64_t>(R)), ell_s, mean_s, var_s, ratio_s,
                     cov_s, cov_se_s, unreached_s, hash_cell(cfg)});
  return res;
}

}  // namespace torvac
