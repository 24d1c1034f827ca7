// SPDX-License-Identifier: Apache-2.0
//
// Experiment scenarios behind the command-line tool. Each scenario produces a
// table that is written as CSV, next to a JSON sidecar holding the full spec,
// the seed and the code version.

#pragma once

#include "mixadc/equalizer.hpp"
#include "mixadc/spectral.hpp"
#include "mixadc/switching.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mixadc {

inline constexpr const char* kVersion = "0.1.0";
/// Bumped whenever a scenario's column set changes.
inline constexpr int kSchemaVersion = 1;

enum class Scenario { GmiVsK, GmiVsSnr, ErgodicBounds, Ber, Verify };
Scenario scenario_from_name(const std::string& name);
std::string to_string(Scenario s);

struct ExperimentSpec {
  Scenario scenario = Scenario::GmiVsK;
  SystemConfig config;
  std::vector<double> snr_db{0.0};
  std::vector<int> k_grid;      // empty: {config.n_highres}
  std::vector<int> taps_grid;   // gmi-vs-snr only; empty: {config.n_taps[0]}
  std::string population;       // ber only, e.g. "hr:4,1:12"
  std::string policy = "norm";
  std::uint64_t seed = 1;
  int draws = 100;
  int frames = 100;
  int error_draws = 64;         // h-tilde draws per channel draw
  bool approximate = false;
  bool matched_multibit = false;
  long verify_samples = 200000;
  int threads = 1;
  std::string output;           // CSV path; the sidecar is output + ".json"

  /// Throws InvalidArgument with a readable message.
  void validate() const;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

/// Number formatting shared by every CSV: shortest round-trip form, "nan"
/// for missing values.
std::string format_number(double x);

struct ScenarioResult {
  Table table;
  /// Extra per-draw records (ergodic-bounds only).
  std::optional<Table> draws;
  /// verify only: every row passed.
  bool all_pass = true;
};

ScenarioResult run_scenario(const ExperimentSpec& spec);

/// Writes the CSV, the optional per-draw CSV (output + ".draws.csv") and the
/// JSON sidecar. Returns the paths written.
std::vector<std::string> write_outputs(const ExperimentSpec& spec, const ScenarioResult& result);

/// JSON text of the sidecar record.
std::string sidecar_json(const ExperimentSpec& spec, const ScenarioResult& result);

/// Antenna selection: only the K antennas with the largest channel norms,
/// all high-resolution, the rest discarded.
GmiReport antenna_selection_baseline(const ChannelSet& channels, int k, double symbol_energy, int user = 0);

/// Closed form vs Monte Carlo table. Columns: check, closed_form, estimate,
/// std_error, z, pass.
ScenarioResult run_verify(long samples, std::uint64_t seed);

struct BenchResult {
  int n_antennas = 0;
  int n_subcarriers = 0;
  double dense_seconds = 0.0;     // explicit inverse of the NQ x NQ matrix
  double permuted_seconds = 0.0;  // Q independent N x N solves
  double speedup = 0.0;
  double max_abs_difference = 0.0;
};

/// Times both solves on one random mixed-ADC instance (best of `repeats`).
BenchResult run_bench(int n_antennas, int n_subcarriers, int repeats, std::uint64_t seed);

}  // namespace mixadc
