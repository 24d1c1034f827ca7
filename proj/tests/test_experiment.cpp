// SPDX-License-Identifier: Apache-2.0

#include "mixadc/experiment.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mixadc;
using mixadc::test::Gen;

namespace {

ExperimentSpec small_spec(Scenario s) {
  ExperimentSpec spec;
  spec.scenario = s;
  spec.config.n_antennas = 4;
  spec.config.n_subcarriers = 4;
  spec.config.n_taps = {2};
  spec.snr_db = {0.0, 10.0};
  spec.k_grid = {0, 2, 4};
  spec.draws = 4;
  spec.frames = 3;
  spec.output = "unused.csv";
  return spec;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("scenario column sets are pinned") {
  const std::vector<std::pair<Scenario, std::vector<std::string>>> golden{
      {Scenario::GmiVsK, {"snr_db", "K", "gmi_lower_bits", "gmi_upper_bits", "capacity_bits", "as_baseline_bits"}},
      {Scenario::GmiVsSnr, {"T", "K", "snr_db", "gmi_lower_bits", "gmi_upper_bits", "lower_se_bits", "limit_bits"}},
      {Scenario::ErgodicBounds,
       {"snr_db", "K", "rho", "draws", "gmi_lower_bits", "gmi_upper_bits", "lower_se_bits", "upper_se_bits",
        "relative_gap"}},
      {Scenario::Ber, {"snr_db", "ebn0_db", "user", "frames", "bit_errors", "ber", "ci95"}},
  };
  for (const auto& [scenario, columns] : golden) {
    ExperimentSpec spec = small_spec(scenario);
    if (scenario == Scenario::Ber) spec.k_grid = {2};
    const ScenarioResult r = run_scenario(spec);
    CHECK(r.table.columns == columns);
    CHECK_FALSE(r.table.rows.empty());
    for (const auto& row : r.table.rows) CHECK(row.size() == columns.size());
  }
  CHECK(kSchemaVersion == 1);
}

TEST_CASE("gmi-vs-K on N = 16, Q = 16, T = 5") {
  ExperimentSpec spec;
  spec.scenario = Scenario::GmiVsK;
  spec.config.n_antennas = 16;
  spec.config.n_subcarriers = 16;
  spec.config.n_taps = {5};
  spec.snr_db = {0.0, 10.0};
  spec.k_grid = {0, 4, 16};
  spec.draws = 3;
  spec.output = "x.csv";
  const ScenarioResult r = run_scenario(spec);
  REQUIRE(r.table.rows.size() == 6);
  CHECK(r.table.rows[0][0] == "0");
  CHECK(r.table.rows[0][1] == "0");
  CHECK(r.table.rows[0][5] == "nan");
  CHECK(r.table.rows[5][1] == "16");
  CHECK(std::stod(r.table.rows[5][2]) <= std::stod(r.table.rows[5][3]));
}

TEST_CASE("same spec and seed give byte-identical CSV, for any thread count") {
  for (Scenario s : {Scenario::GmiVsK, Scenario::ErgodicBounds, Scenario::GmiVsSnr}) {
    ExperimentSpec spec = small_spec(s);
    const std::string a = run_scenario(spec).table.to_csv();
    spec.threads = 4;
    const std::string b = run_scenario(spec).table.to_csv();
    CHECK(a == b);
    spec.seed = 2;
    CHECK(run_scenario(spec).table.to_csv() != a);
  }
  ExperimentSpec ber = small_spec(Scenario::Ber);
  ber.k_grid = {2};
  const std::string a = run_scenario(ber).table.to_csv();
  ber.threads = 3;
  CHECK(run_scenario(ber).table.to_csv() == a);
}

TEST_CASE("outputs and sidecar") {
  const auto dir = std::filesystem::temp_directory_path() / "mixadc_test_outputs";
  std::filesystem::create_directories(dir);
  ExperimentSpec spec = small_spec(Scenario::ErgodicBounds);
  spec.output = (dir / "bounds.csv").string();
  spec.seed = 99;
  const ScenarioResult r = run_scenario(spec);
  REQUIRE(r.draws.has_value());
  const auto paths = write_outputs(spec, r);
  CHECK(paths.size() == 3);
  const std::string csv = slurp(spec.output);
  CHECK(csv == r.table.to_csv());
  CHECK(csv.rfind("snr_db,K,rho,draws,", 0) == 0);
  const auto meta = nlohmann::json::parse(slurp(spec.output + ".json"));
  CHECK(meta["seed"] == 99);
  CHECK(meta["schema_version"] == kSchemaVersion);
  CHECK(meta["code_version"] == kVersion);
  CHECK(meta["scenario"] == "ergodic-bounds");
  CHECK(meta["config"]["n_antennas"] == 4);
  CHECK_FALSE(slurp(spec.output + ".draws.csv").empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("spec validation") {
  ExperimentSpec spec = small_spec(Scenario::GmiVsK);
  CHECK_NOTHROW(spec.validate());
  spec.snr_db.clear();
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = small_spec(Scenario::GmiVsK);
  spec.output.clear();
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = small_spec(Scenario::GmiVsK);
  spec.k_grid = {5};
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = small_spec(Scenario::Ber);
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec.population = "hr:1,1:3";
  CHECK_NOTHROW(spec.validate());
  spec.policy = "greedy";
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  CHECK_THROWS_AS(scenario_from_name("figure-3"), InvalidArgument);
  CHECK(scenario_from_name("gmi-vs-K") == Scenario::GmiVsK);
}

TEST_CASE("antenna selection baseline") {
  Gen gen(1);
  const ChannelSet ch = gen.channel(5, 8, 3);
  const GmiReport all = antenna_selection_baseline(ch, 5, 2.0);
  CHECK(std::abs(all.gmi_nats - gmi_all_highres(user_spectra(ch), 2.0).gmi.gmi_nats) < 1e-14);
  CHECK_THROWS_AS(antenna_selection_baseline(ch, 0, 2.0), InvalidArgument);

  std::vector<std::vector<cvec>> taps(1, std::vector<cvec>(2, cvec::Zero(4)));
  taps[0][0](0) = 1.0;
  taps[0][1](0) = 2.0;
  const ChannelSet two(taps);
  const std::vector<cvec> second{two.spectrum(0, 1)};
  CHECK(antenna_selection_baseline(two, 1, 1.0).delta == gmi_all_highres(second, 1.0).gmi.delta);

  // Mixed receiver never loses to selection with the same high-res antennas.
  for (int trial = 0; trial < 30; ++trial) {
    const int n = gen.integer(2, 6), q = gen.integer(2, 8);
    const ChannelSet c = gen.channel(n, q, gen.integer(1, q));
    const int k = gen.integer(1, n);
    const double es = std::pow(10.0, gen.real(-1.0, 2.0));
    const double mixed = gmi_static(c, norm_based_switch(c, k), es).gmi_nats;
    CHECK(mixed >= antenna_selection_baseline(c, k, es).gmi_nats - 1e-12);
  }
}

TEST_CASE("verify scenario passes") {
  const ScenarioResult r = run_verify(50000, 3);
  CHECK(r.all_pass);
  CHECK(r.table.columns == std::vector<std::string>{"check", "closed_form", "estimate", "std_error", "z", "pass"});
  for (const auto& row : r.table.rows) CHECK(row.back() == "pass");
}

TEST_CASE("bench reports agreement") {
  const BenchResult b = run_bench(8, 8, 1, 1);
  CHECK(b.max_abs_difference < 1e-10);
  CHECK(b.speedup > 0.0);
}

}  // TEST_SUITE
