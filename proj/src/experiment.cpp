// SPDX-License-Identifier: Apache-2.0

#include "mixadc/experiment.hpp"

#include "mixadc/ergodic.hpp"
#include "mixadc/linklevel.hpp"
#include "mixadc/oracle.hpp"
#include "mixadc/secondstats.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace mixadc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double bits(double nats) { return nats_to_bits(nats); }

std::vector<int> k_values(const ExperimentSpec& spec) {
  return spec.k_grid.empty() ? std::vector<int>{spec.config.n_highres} : spec.k_grid;
}

ErgodicOptions ergodic_options(const ExperimentSpec& spec) {
  ErgodicOptions o;
  o.conditional.mc_samples = spec.error_draws;
  o.conditional.approximate = spec.approximate;
  o.threads = spec.threads;
  return o;
}

// Mixed-ADC bounds are undefined when training is impossible (K = 0 with
// imperfect CSI); such rows carry NaN.
bool trainable(const SystemConfig& cfg) { return cfg.mse_h == 0.0 || cfg.n_highres >= 1; }

ScenarioResult run_gmi_vs_k(const ExperimentSpec& spec) {
  ScenarioResult out;
  out.table.columns = {"snr_db", "K", "gmi_lower_bits", "gmi_upper_bits", "capacity_bits", "as_baseline_bits"};
  const SwitchPolicy policy = SwitchPolicy::from_name(spec.policy);
  for (double snr : spec.snr_db) {
    SystemConfig cfg = spec.config;
    cfg.symbol_energy = db_to_linear(snr);

    // Capacity of the conventional receiver: every antenna high-resolution,
    // training with K = N.
    cfg.n_highres = cfg.n_antennas;
    ErgodicOptions cap_opts = ergodic_options(spec);
    cap_opts.with_capacity = true;
    const ErgodicReport full = ergodic_bounds(cfg, SwitchPolicy::norm_based(), spec.draws, cap_opts, spec.seed);
    const double capacity = full.rho * full.capacity;

    for (int k : k_values(spec)) {
      cfg.n_highres = k;
      double lower = kNaN, upper = kNaN, as = kNaN;
      if (trainable(cfg)) {
        const ErgodicReport r = ergodic_bounds(cfg, policy, spec.draws, ergodic_options(spec), spec.seed);
        lower = bits(r.lower);
        upper = bits(r.upper);
      }
      if (k >= 1) {
        ErgodicOptions as_opts = ergodic_options(spec);
        as_opts.antenna_selection = true;
        as = bits(ergodic_bounds(cfg, policy, spec.draws, as_opts, spec.seed).lower);
      }
      out.table.rows.push_back({format_number(snr), std::to_string(k), format_number(lower), format_number(upper),
                                format_number(bits(capacity)), format_number(as)});
    }
  }
  return out;
}

// Mean of the one-bit high-SNR limit of Delta over the scenario's draws.
double mean_high_snr_limit(const SystemConfig& cfg, int draws, std::uint64_t seed) {
  CompensatedSum s;
  for (int d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    const ChannelSet h = draw_channel(cfg, rng);
    s.add(high_snr_limit(user_spectra(h, 0)));
  }
  return s.value() / draws;
}

ScenarioResult run_gmi_vs_snr(const ExperimentSpec& spec) {
  ScenarioResult out;
  out.table.columns = {"T", "K", "snr_db", "gmi_lower_bits", "gmi_upper_bits", "lower_se_bits", "limit_bits"};
  const SwitchPolicy policy = SwitchPolicy::from_name(spec.policy);
  const std::vector<int> taps = spec.taps_grid.empty() ? std::vector<int>{spec.config.n_taps.at(0)} : spec.taps_grid;
  for (int t : taps) {
    SystemConfig cfg = spec.config;
    cfg.n_taps = {t};
    for (int k : k_values(spec)) {
      cfg.n_highres = k;
      double limit = kNaN;
      if (k == 0 && cfg.mse_h == 0.0 && cfg.n_users == 1)
        limit = bits(gmi_from_delta(mean_high_snr_limit(cfg, spec.draws, spec.seed)));
      for (double snr : spec.snr_db) {
        cfg.symbol_energy = db_to_linear(snr);
        double lower = kNaN, upper = kNaN, se = kNaN;
        if (trainable(cfg)) {
          const ErgodicReport r = ergodic_bounds(cfg, policy, spec.draws, ergodic_options(spec), spec.seed);
          lower = bits(r.lower);
          upper = bits(r.upper);
          se = bits(r.lower_se);
        }
        out.table.rows.push_back({std::to_string(t), std::to_string(k), format_number(snr), format_number(lower),
                                  format_number(upper), format_number(se), format_number(limit)});
      }
    }
  }
  return out;
}

ScenarioResult run_ergodic(const ExperimentSpec& spec) {
  ScenarioResult out;
  out.table.columns = {"snr_db",         "K",           "rho",           "draws",         "gmi_lower_bits",
                       "gmi_upper_bits", "lower_se_bits", "upper_se_bits", "relative_gap"};
  Table draws;
  draws.columns = {"snr_db", "K", "draw", "user", "delta", "gmi_bits"};
  const SwitchPolicy policy = SwitchPolicy::from_name(spec.policy);
  for (double snr : spec.snr_db) {
    SystemConfig cfg = spec.config;
    cfg.symbol_energy = db_to_linear(snr);
    for (int k : k_values(spec)) {
      cfg.n_highres = k;
      if (!trainable(cfg)) {
        out.table.rows.push_back({format_number(snr), std::to_string(k), format_number(kNaN),
                                  std::to_string(spec.draws), format_number(kNaN), format_number(kNaN),
                                  format_number(kNaN), format_number(kNaN), format_number(kNaN)});
        continue;
      }
      const ErgodicReport r = ergodic_bounds(cfg, policy, spec.draws, ergodic_options(spec), spec.seed);
      const double gap = r.upper > 0.0 ? (r.upper - r.lower) / r.upper : 0.0;
      out.table.rows.push_back({format_number(snr), std::to_string(k), format_number(r.rho),
                                std::to_string(r.n_draws), format_number(bits(r.lower)), format_number(bits(r.upper)),
                                format_number(bits(r.lower_se)), format_number(bits(r.upper_se)),
                                format_number(gap)});
      for (int d = 0; d < r.n_draws; ++d)
        for (int u = 0; u < cfg.n_users; ++u) {
          const double delta = r.deltas[static_cast<std::size_t>(d) * cfg.n_users + u];
          draws.rows.push_back({format_number(snr), std::to_string(k), std::to_string(d), std::to_string(u),
                                format_number(delta), format_number(bits(gmi_from_delta(delta)))});
        }
    }
  }
  out.draws = std::move(draws);
  return out;
}

ScenarioResult run_ber_scenario(const ExperimentSpec& spec) {
  ScenarioResult out;
  out.table.columns = {"snr_db", "ebn0_db", "user", "frames", "bit_errors", "ber", "ci95"};
  BerOptions opts;
  opts.snr_db = spec.snr_db;
  opts.frames = spec.frames;
  opts.policy = SwitchPolicy::from_name(spec.policy);
  opts.matched_multibit = spec.matched_multibit;
  opts.threads = spec.threads;
  if (!spec.population.empty()) opts.population = AdcPopulation::parse(spec.population);
  const BerReport r = simulate_ber(spec.config, opts, spec.seed);
  for (const auto& p : r.points)
    out.table.rows.push_back({format_number(p.snr_db), format_number(p.ebn0_db), std::to_string(p.user),
                              std::to_string(p.frames), std::to_string(p.bit_errors), format_number(p.ber),
                              format_number(p.ci95)});
  return out;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyRow {
  std::string check;
  double closed = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  bool pass = false;
};

// Statistical row: |estimate - closed| <= 3 standard errors.
VerifyRow stat_row(std::string name, cplx closed, const MomentEstimate& est) {
  VerifyRow r;
  r.check = std::move(name);
  r.closed = std::abs(closed);
  r.estimate = std::abs(est.value);
  r.std_error = est.std_error;
  const double diff = std::abs(est.value - closed);
  r.z = est.std_error > 0.0 ? diff / est.std_error : (diff < 1e-12 ? 0.0 : kNaN);
  r.pass = std::isfinite(r.z) && r.z <= 3.0;
  return r;
}

// Several entries summarized by the worst one; passes only if all pass.
VerifyRow worst_row(std::string name, const std::vector<VerifyRow>& parts) {
  VerifyRow worst{std::move(name), 0.0, 0.0, 0.0, -1.0, true};
  bool all = true;
  for (const auto& r : parts) {
    all = all && r.pass;
    const double z = std::isfinite(r.z) ? r.z : std::numeric_limits<double>::infinity();
    if (z > worst.z) {
      worst.closed = r.closed;
      worst.estimate = r.estimate;
      worst.std_error = r.std_error;
      worst.z = z;
    }
  }
  worst.pass = all;
  return worst;
}

VerifyRow matrix_row(std::string name, const cmat& closed, const MatrixEstimate& est) {
  std::vector<VerifyRow> parts;
  for (Eigen::Index i = 0; i < closed.rows(); ++i)
    for (Eigen::Index j = 0; j < closed.cols(); ++j) {
      MomentEstimate e;
      e.value = est.value(i, j);
      e.std_error = est.std_error(i, j).real();
      parts.push_back(stat_row(name, closed(i, j), e));
    }
  return worst_row(std::move(name), parts);
}

// Deterministic row: relative difference within tol.
VerifyRow exact_row(std::string name, double closed, double other, double tol) {
  VerifyRow r;
  r.check = std::move(name);
  r.closed = closed;
  r.estimate = other;
  r.std_error = 0.0;
  r.z = std::abs(closed - other) / std::max(std::abs(closed), 1e-300);
  r.pass = r.z <= tol;
  return r;
}

ChannelSet verify_channel(int n, int q, int t, int users, Rng& rng) {
  SystemConfig cfg;
  cfg.n_antennas = n;
  cfg.n_subcarriers = q;
  cfg.n_taps = {t};
  cfg.n_users = users;
  return draw_channel(cfg, rng);
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario scenario_from_name(const std::string& name) {
  if (name == "gmi-vs-K" || name == "gmi-vs-k") return Scenario::GmiVsK;
  if (name == "gmi-vs-snr") return Scenario::GmiVsSnr;
  if (name == "ergodic-bounds") return Scenario::ErgodicBounds;
  if (name == "ber") return Scenario::Ber;
  if (name == "verify") return Scenario::Verify;
  throw InvalidArgument("unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::GmiVsK: return "gmi-vs-K";
    case Scenario::GmiVsSnr: return "gmi-vs-snr";
    case Scenario::ErgodicBounds: return "ergodic-bounds";
    case Scenario::Ber: return "ber";
    case Scenario::Verify: return "verify";
  }
  return "unknown";
}

void ExperimentSpec::validate() const {
  config.validate();
  if (snr_db.empty()) throw InvalidArgument("SNR grid is empty");
  for (int k : k_grid)
    if (k < 0 || k > config.n_antennas) throw InvalidArgument("every K must lie in [0, N]");
  for (int t : taps_grid)
    if (t < 1 || t > config.n_subcarriers) throw InvalidArgument("every T must lie in [1, Q]");
  if (draws < 2) throw InvalidArgument("draws must be at least 2");
  if (frames < 1) throw InvalidArgument("frames must be positive");
  if (error_draws < 1) throw InvalidArgument("error_draws must be positive");
  if (threads < 1) throw InvalidArgument("threads must be positive");
  if (verify_samples < 1000) throw InvalidArgument("verify_samples must be at least 1000");
  SwitchPolicy::from_name(policy);
  if (scenario == Scenario::Ber) {
    if (!population.empty()) {
      if (AdcPopulation::parse(population).total() != config.n_antennas)
        throw InvalidArgument("ADC population must cover all N antennas");
    } else if (k_grid.size() > 1) {
      throw InvalidArgument("the ber scenario takes one ADC configuration per run");
    }
  }
  if (output.empty()) throw InvalidArgument("output path is required");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  return fmt::format("{}", x);
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += '\n';
  }
  return out;
}

ScenarioResult run_scenario(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentSpec s = spec;
  if (s.scenario == Scenario::Ber && s.population.empty() && !s.k_grid.empty()) s.config.n_highres = s.k_grid[0];
  switch (s.scenario) {
    case Scenario::GmiVsK: return run_gmi_vs_k(s);
    case Scenario::GmiVsSnr: return run_gmi_vs_snr(s);
    case Scenario::ErgodicBounds: return run_ergodic(s);
    case Scenario::Ber: return run_ber_scenario(s);
    case Scenario::Verify: return run_verify(s.verify_samples, s.seed);
  }
  throw InvalidArgument("unknown scenario");
}

std::string sidecar_json(const ExperimentSpec& spec, const ScenarioResult& result) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["code_version"] = kVersion;
  j["scenario"] = to_string(spec.scenario);
  j["seed"] = spec.seed;
  j["columns"] = result.table.columns;
  ordered_json c;
  c["n_antennas"] = spec.config.n_antennas;
  c["n_highres"] = spec.config.n_highres;
  c["n_subcarriers"] = spec.config.n_subcarriers;
  c["n_taps"] = spec.config.n_taps;
  c["n_users"] = spec.config.n_users;
  c["mse_h"] = spec.config.mse_h;
  c["coherence_len"] = spec.config.coherence_len;
  c["pilot_spacing"] = spec.config.pilot_spacing;
  j["config"] = c;
  j["snr_db"] = spec.snr_db;
  j["k_grid"] = spec.k_grid;
  j["taps_grid"] = spec.taps_grid;
  j["population"] = spec.population;
  j["policy"] = spec.policy;
  j["draws"] = spec.draws;
  j["frames"] = spec.frames;
  j["error_draws"] = spec.error_draws;
  j["approximate"] = spec.approximate;
  j["matched_multibit"] = spec.matched_multibit;
  j["verify_samples"] = spec.verify_samples;
  j["rows"] = result.table.rows.size();
  if (spec.scenario == Scenario::Verify) j["all_pass"] = result.all_pass;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_outputs(const ExperimentSpec& spec, const ScenarioResult& result) {
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write " + path);
    f << text;
    if (!f) throw InvalidArgument("failed writing " + path);
  };
  std::vector<std::string> paths{spec.output};
  write(spec.output, result.table.to_csv());
  if (result.draws) {
    paths.push_back(spec.output + ".draws.csv");
    write(paths.back(), result.draws->to_csv());
  }
  paths.push_back(spec.output + ".json");
  write(paths.back(), sidecar_json(spec, result));
  return paths;
}

GmiReport antenna_selection_baseline(const ChannelSet& channels, int k, double symbol_energy, int user) {
  if (k < 1) throw InvalidArgument("antenna selection needs K >= 1");
  if (k > channels.n_antennas()) throw InvalidArgument("K must not exceed N");
  const auto order = rank_by_norm(channels);
  const std::vector<int> keep(order.begin(), order.begin() + k);
  const ChannelSet sub = channels.restrict_to(keep);
  if (channels.n_users() == 1) return gmi_all_highres(user_spectra(sub, 0), symbol_energy).gmi;
  return gmi_static(sub, AdcSwitchVector::all(k, 1), symbol_energy, user);
}

ScenarioResult run_verify(long samples, std::uint64_t seed) {
  std::vector<VerifyRow> rows;
  Rng master(seed);

  // Arcsine law and the one-bit cross moment.
  const struct {
    double s1, s2;
    cplx s12;
  } covs[] = {{1.0, 1.0, 1.0}, {1.0, 1.0, 0.5}, {2.0, 0.5, cplx(0.4, 0.5)}};
  for (const auto& c : covs) {
    Rng rng = master.fork(rows.size());
    const PairMomentEstimate e = mc_pair_moments(c.s1, c.s2, c.s12, samples, rng);
    const std::string tag = fmt::format("({},{},{}{:+}j)", c.s1, c.s2, c.s12.real(), c.s12.imag());
    rows.push_back(stat_row("sign cross moment " + tag, e.cross_closed, e.cross));
    rows.push_back(stat_row("sign correlation " + tag, e.sign_corr_closed, e.sign_corr));
  }

  // Quantized correlations R_nm for each ADC pairing.
  Rng chan_rng = master.fork(100);
  const ChannelSet h = verify_channel(2, 4, 2, 1, chan_rng);
  const double es = 1.0;
  const std::vector<std::pair<std::vector<AdcSpec>, std::string>> pairings = {
      {{AdcSpec::high_res(), AdcSpec::high_res()}, "hr/hr"},
      {{AdcSpec::one_bit(), AdcSpec::one_bit()}, "1/1"},
      {{AdcSpec::high_res(), AdcSpec::one_bit()}, "hr/1"},
      {{AdcSpec::multi_bit(3), AdcSpec::multi_bit(3)}, "3b/3b"},
      {{AdcSpec::multi_bit(2), AdcSpec::one_bit()}, "2b/1"},
      {{AdcSpec::multi_bit(4), AdcSpec::high_res()}, "4b/hr"},
  };
  for (const auto& [specs, name] : pairings) {
    Rng rng = master.fork(200 + rows.size());
    const cmat closed = quantized_cov(0, 1, specs, h, es);
    const MatrixEstimate est = mc_quantized_cov(0, 1, specs, h, es, samples, rng);
    rows.push_back(matrix_row("R_01 " + name, closed, est));
  }

  // g and Delta for mixed front ends.
  for (const auto& [specs, name] : pairings) {
    if (name == "hr/hr") continue;
    Rng rng = master.fork(300 + rows.size());
    const cvec g = build_g(h, specs, es, 0);
    const auto est = mc_g(h, specs, es, samples, rng);
    std::vector<VerifyRow> parts;
    for (Eigen::Index i = 0; i < g.size(); ++i) parts.push_back(stat_row("g " + name, g(i), est[i]));
    rows.push_back(worst_row("g " + name, parts));

    const QuantizedStats stats = build_stats(h, specs, es);
    const GmiReport closed = delta_gmi(stats.d, stats.g[0], h.n_subcarriers(), es);
    const cvec w = solve_equalizer(stats.d, stats.g[0]);
    Rng drng = master.fork(400 + rows.size());
    rows.push_back(stat_row("Delta(w_opt) " + name, closed.delta, mc_delta(h, specs, w, es, samples, drng)));
  }

  // Exact identities.
  Rng exact_rng = master.fork(500);
  {
    const ChannelSet c = verify_channel(3, 8, 3, 1, exact_rng);
    const double general = gmi_static(c, AdcSwitchVector::all(3, 1), 2.0).gmi_nats;
    rows.push_back(exact_row("all high-res closed form", gmi_all_highres(user_spectra(c), 2.0).gmi.gmi_nats, general,
                             1e-9));
  }
  {
    const ChannelSet c = verify_channel(3, 4, 1, 1, exact_rng);
    const AdcSwitchVector d{{1, 0, 0}};
    rows.push_back(exact_row("flat-fading closed form", gmi_flat_fading(flat_gains(c), d, 1.5).delta,
                             gmi_static(c, d, 1.5).delta, 1e-9));
  }
  {
    const ChannelSet c = verify_channel(3, 8, 3, 1, exact_rng);
    const AdcSwitchVector d{{0, 1, 0}};
    const BlockDiagonalMatrix fast = build_D(c, d, 3.0);
    double off = 0.0;
    const BlockDiagonalMatrix dense = build_D(c, d, 3.0, DPath::Dense, &off);
    double diff = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) diff = std::max(diff, (fast.block(i, j) - dense.block(i, j)).cwiseAbs().maxCoeff());
    VerifyRow r{"circulant vs dense D", 0.0, diff, 0.0, diff, diff < 1e-10 && off < 1e-10};
    rows.push_back(r);
  }

  ScenarioResult out;
  out.table.columns = {"check", "closed_form", "estimate", "std_error", "z", "pass"};
  for (const auto& r : rows) {
    out.table.rows.push_back({r.check, format_number(r.closed), format_number(r.estimate), format_number(r.std_error),
                              format_number(r.z), r.pass ? "pass" : "FAIL"});
    out.all_pass = out.all_pass && r.pass;
  }
  return out;
}

BenchResult run_bench(int n_antennas, int n_subcarriers, int repeats, std::uint64_t seed) {
  if (repeats < 1) throw InvalidArgument("repeats must be positive");
  Rng rng(seed);
  const ChannelSet h = verify_channel(n_antennas, n_subcarriers, std::min(5, n_subcarriers), 1, rng);
  const AdcSwitchVector delta = norm_based_switch(h, n_antennas / 4);
  const double es = 1.0;
  const BlockDiagonalMatrix d = build_D(h, delta, es);
  const cvec g = build_g(h, delta, es, 0);

  using clock = std::chrono::steady_clock;
  auto time_best = [&](auto&& fn, cvec& result) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = clock::now();
      result = fn();
      const auto t1 = clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };

  BenchResult b;
  b.n_antennas = n_antennas;
  b.n_subcarriers = n_subcarriers;
  cvec w_dense, w_perm;
  b.dense_seconds = time_best([&] { return dense_inverse_solve(d, g); }, w_dense);
  b.permuted_seconds = time_best([&] { return solve_equalizer(d, g); }, w_perm);
  b.speedup = b.dense_seconds / b.permuted_seconds;
  b.max_abs_difference = (w_dense - w_perm).cwiseAbs().maxCoeff();
  return b;
}

}  // namespace mixadc
