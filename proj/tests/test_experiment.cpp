#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cffl/experiment.hpp"
#include "cffl/quantization.hpp"

using namespace cffl;

namespace {

const char* kBaseConfig = R"(
system.num_aps = 4
system.num_ues = 2
system.area_km = 0.5
system.bandwidth_hz = 2e7
system.pilot_len = 20
system.block_len = 200
system.grad_dim = 400
system.max_power_w = 0.2
system.update_bits = 3.2e4
system.rounds = 4
adc.bits = 2
dac.bits = 2
schedule.lag_percent = 85
schedule.lag_tolerance = 3
sweep.axis = bits
sweep.values = 1,3
sweep.drops = 2
sweep.mode = sync-adc
sweep.power = full
seed = 11
)";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("kv parsing round trip") {
  const KvConfig kv = KvConfig::parse_string(
      "a.x = 3 # comment\n\n# full line comment\nb.y = hello\nc.z = 1,2,3\n"
      "d.w = true\n");
  CHECK(kv.get_int("a.x", 0) == 3);
  CHECK(kv.get_string("b.y", "") == "hello");
  CHECK(kv.get_list("c.z", {}) == std::vector<double>{1, 2, 3});
  CHECK(kv.get_bool("d.w", false));
  CHECK(kv.get_double("missing", 2.5) == 2.5);
  CHECK(kv.hash() == KvConfig::parse_string("b.y=hello\na.x=3\nc.z=1,2,3\nd.w=true").hash());
  CHECK_THROWS_AS(KvConfig::parse_string("not a kv line\n"), Error);
  CHECK_THROWS_AS(kv.get_int("b.y", 0), Error);
}

TEST_CASE("experiment config from kv with defaults") {
  const ExperimentConfig cfg =
      ExperimentConfig::from_kv(KvConfig::parse_string(kBaseConfig));
  CHECK(cfg.system.num_aps == 4);
  CHECK(cfg.system.num_ues == 2);
  CHECK(cfg.adc_bits == 2);
  CHECK(cfg.axis == SweepAxis::kBits);
  CHECK(cfg.axis_values == std::vector<double>{1, 3});
  CHECK(cfg.mode == ChainMode::kSyncAdc);
  CHECK(cfg.power == PowerMode::kFull);
  CHECK(cfg.seed == 11);
  CHECK(cfg.config_hash != 0);

  KvConfig bad = KvConfig::parse_string(kBaseConfig);
  bad.set("sweep.mode", "bogus");
  CHECK_THROWS_AS(ExperimentConfig::from_kv(bad), Error);
}

TEST_CASE("single point equals hand-composed module calls") {
  ExperimentConfig cfg =
      ExperimentConfig::from_kv(KvConfig::parse_string(kBaseConfig));
  cfg.axis_values = {2.0};  // pinned at the configured bit depth
  const SweepRow row = run_point(cfg, 0, 0);
  REQUIRE(row.ok);

  const auto [aps, ues] = place_nodes(cfg.system, row.seed);
  const Mat beta = large_scale_fading(aps, ues, cfg.pathloss, row.seed);
  const double alpha = aqnm_gain(2);
  const double by_hand = full_power_baseline_adc(beta, alpha, cfg.system);
  CHECK(row.total_time_s == doctest::Approx(by_hand).epsilon(1e-12));

  const RateModel model = adc_rate_model(beta, alpha, cfg.system);
  const Vec rates = true_rates(
      model, Vec::Constant(cfg.system.num_ues, cfg.system.max_power_w));
  CHECK(row.mean_rate_bps == doctest::Approx(rates.mean()).epsilon(1e-12));
}

TEST_CASE("sweep output is independent of the worker count") {
  const ExperimentConfig cfg =
      ExperimentConfig::from_kv(KvConfig::parse_string(kBaseConfig));
  const SweepTable serial = run_sweep(cfg, 1);
  const SweepTable parallel = run_sweep(cfg, 8);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  REQUIRE(serial.rows.size() == 4);  // 2 axis values x 2 drops
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].scenario_id == parallel.rows[i].scenario_id);
    CHECK(serial.rows[i].total_time_s == parallel.rows[i].total_time_s);
    CHECK(serial.rows[i].lambda == parallel.rows[i].lambda);
  }
}

TEST_CASE("async sweep runs and respects the schedule") {
  KvConfig kv = KvConfig::parse_string(kBaseConfig);
  kv.set("sweep.mode", "async-dac");
  kv.set("sweep.axis", "lag_percent");
  kv.set("sweep.values", "50,100");
  kv.set("system.num_ues", "3");
  const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
  const SweepTable table = run_sweep(cfg, 2);
  for (const auto& row : table.rows) {
    REQUIRE(row.ok);
    CHECK(row.total_time_s > 0.0);
  }
}

TEST_CASE("emit_results writes deterministic files") {
  const ExperimentConfig cfg =
      ExperimentConfig::from_kv(KvConfig::parse_string(kBaseConfig));
  const SweepTable table = run_sweep(cfg, 2);
  const auto dir = std::filesystem::temp_directory_path() / "cffl_emit_test";
  std::filesystem::remove_all(dir);

  const auto files_a = emit_results(table, dir.string(), "svg", "sweep");
  REQUIRE(files_a.size() == 2);
  const std::string csv_a = slurp(files_a[0]);
  const std::string svg_a = slurp(files_a[1]);
  CHECK(csv_a.find("scenario_id,config_hash,seed") == 0);
  // Header + one row per (axis value, drop).
  CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 5);
  CHECK(svg_a.find("<svg") != std::string::npos);

  const auto files_b = emit_results(table, dir.string(), "svg", "sweep");
  CHECK(slurp(files_b[0]) == csv_a);
  CHECK(slurp(files_b[1]) == svg_a);
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(emit_results(SweepTable{}, dir.string(), "csv", "x"), Error);
}

TEST_CASE("sweep survives per-point failures and reports them") {
  KvConfig kv = KvConfig::parse_string(kBaseConfig);
  // An epsilon of zero is rejected by validation at the config layer, so
  // break a point differently: lag tolerance stays valid while one axis
  // value is an invalid bit depth.
  kv.set("sweep.values", "0,3");
  const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
  const SweepTable table = run_sweep(cfg, 1);
  int failed = 0, passed = 0;
  for (const auto& row : table.rows) row.ok ? ++passed : ++failed;
  CHECK(failed == 2);  // both drops of the b = 0 point
  CHECK(passed == 2);
  for (const auto& row : table.rows)
    if (!row.ok) CHECK(row.error == "invalid-argument");
}
