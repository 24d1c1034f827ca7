// SPDX-License-Identifier: Apache-2.0
//
// mixadc: experiment runner for the mixed-ADC OFDM uplink.
//
//   mixadc run --scenario gmi-vs-K -N 16 --subcarriers 16 --taps 5 --snr 0,10 -o out.csv
//   mixadc verify
//   mixadc bench --antennas 32 --subcarriers 32
//
// Every option of `run` can also come from an INI file given with --config
// (keys as the long option names, under a [run] section).

#include "mixadc/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cstdio>
#include <iostream>

namespace {

int report_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return 2;
}

void print_table(const mixadc::Table& t) { std::cout << t.to_csv(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Achievable rates and BER of mixed-ADC massive MIMO OFDM receivers"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file with option values", false);

  int threads = 1;
  app.add_option("--threads", threads, "Worker threads")->envname("MIXADC_THREADS")->check(CLI::PositiveNumber);

  // run ---------------------------------------------------------------------
  mixadc::ExperimentSpec spec;
  std::string scenario = "gmi-vs-K";
  auto* run = app.add_subcommand("run", "Run one experiment scenario and write CSV + JSON sidecar");
  run->add_option("--scenario", scenario, "gmi-vs-K | gmi-vs-snr | ergodic-bounds | ber | verify")
      ->check(CLI::IsMember({"gmi-vs-K", "gmi-vs-k", "gmi-vs-snr", "ergodic-bounds", "ber", "verify"}));
  run->add_option("-N,--antennas", spec.config.n_antennas, "Base-station antennas")->capture_default_str();
  run->add_option("-K,--highres", spec.config.n_highres, "High-resolution ADC pairs")->capture_default_str();
  run->add_option("-Q,--subcarriers", spec.config.n_subcarriers, "Subcarriers")->capture_default_str();
  run->add_option("-T,--taps", spec.config.n_taps, "Taps (one value, or one per user)")->delimiter(',');
  run->add_option("-U,--users", spec.config.n_users, "Users")->capture_default_str();
  run->add_option("--mse-h", spec.config.mse_h, "Normalized channel-estimation MSE")->capture_default_str();
  run->add_option("--coherence", spec.config.coherence_len, "Coherence interval T_c in OFDM symbols");
  run->add_option("--pilot-spacing", spec.config.pilot_spacing, "Pilot spacing N_s");
  run->add_option("--snr", spec.snr_db, "SNR grid in dB")->delimiter(',');
  run->add_option("--k-grid", spec.k_grid, "K grid")->delimiter(',');
  run->add_option("--taps-grid", spec.taps_grid, "T grid (gmi-vs-snr)")->delimiter(',');
  run->add_option("--population", spec.population, "ADC population for ber, e.g. hr:4,1:12");
  run->add_option("--policy", spec.policy, "Switch policy: norm | random")->capture_default_str();
  run->add_option("--seed", spec.seed, "Master seed")->capture_default_str();
  run->add_option("--draws", spec.draws, "Channel draws")->capture_default_str();
  run->add_option("--frames", spec.frames, "Frames per SNR point (ber)")->capture_default_str();
  run->add_option("--error-draws", spec.error_draws, "Channel-error draws per channel draw")->capture_default_str();
  run->add_flag("--approximate", spec.approximate, "Closed-form approximation of the conditional statistics");
  run->add_flag("--matched-multibit", spec.matched_multibit, "Design the BER equalizer for the multi-bit ADCs");
  run->add_option("--verify-samples", spec.verify_samples, "Monte Carlo samples per verify row");
  run->add_option("-o,--output", spec.output, "Output CSV path")->required();

  // verify ------------------------------------------------------------------
  long verify_samples = 200000;
  std::uint64_t verify_seed = 1;
  std::string verify_output;
  auto* verify = app.add_subcommand("verify", "Closed forms against Monte Carlo; exit 0 iff all rows pass");
  verify->add_option("--samples", verify_samples, "Monte Carlo samples per row")->capture_default_str();
  verify->add_option("--seed", verify_seed, "Seed")->capture_default_str();
  verify->add_option("-o,--output", verify_output, "Also write CSV + sidecar here");

  // bench -------------------------------------------------------------------
  int bench_n = 32, bench_q = 32, bench_repeats = 3;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench", "Time the permuted block solve against dense inversion");
  bench->add_option("--antennas", bench_n, "N")->capture_default_str();
  bench->add_option("--subcarriers", bench_q, "Q")->capture_default_str();
  bench->add_option("--repeats", bench_repeats, "Best of this many runs")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what());
  }

  try {
    if (*run) {
      spec.scenario = mixadc::scenario_from_name(scenario);
      spec.threads = threads;
      const mixadc::ScenarioResult result = mixadc::run_scenario(spec);
      for (const auto& path : mixadc::write_outputs(spec, result)) std::cerr << "wrote " << path << '\n';
      return result.all_pass ? 0 : 1;
    }
    if (*verify) {
      const mixadc::ScenarioResult result = mixadc::run_verify(verify_samples, verify_seed);
      print_table(result.table);
      if (!verify_output.empty()) {
        mixadc::ExperimentSpec vs;
        vs.scenario = mixadc::Scenario::Verify;
        vs.seed = verify_seed;
        vs.verify_samples = verify_samples;
        vs.output = verify_output;
        mixadc::write_outputs(vs, result);
      }
      return result.all_pass ? 0 : 1;
    }
    if (*bench) {
      const mixadc::BenchResult b = mixadc::run_bench(bench_n, bench_q, bench_repeats, bench_seed);
      std::cout << "N,Q,dense_inverse_s,permuted_s,speedup,max_abs_difference\n"
                << fmt::format("{},{},{:.6g},{:.6g},{:.1f},{:.3g}\n", b.n_antennas, b.n_subcarriers, b.dense_seconds,
                               b.permuted_seconds, b.speedup, b.max_abs_difference);
      return 0;
    }
  } catch (const mixadc::InvalidArgument& e) {
    return report_error("invalid_argument", e.what());
  } catch (const mixadc::SolverError& e) {
    return report_error("solver", e.what());
  } catch (const mixadc::NumericalIntegrityError& e) {
    return report_error("numerical_integrity", e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
