// Command-line front-end: scenario simulation, power-control solves, DP
// checks, FL training traces and batch sweeps over one config axis.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "cffl/experiment.hpp"
#include "cffl/fl.hpp"
#include "cffl/quantization.hpp"
#include "cffl/scheduler.hpp"

namespace {

using cffl::ExperimentConfig;
using cffl::KvConfig;
using cffl::Mat;
using cffl::Vec;
using json = nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string format = "csv";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int drops = 0;
  int workers = 1;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::pair<KvConfig, ExperimentConfig> load_config(const CommonArgs& args) {
  KvConfig kv = args.config_path.empty() ? KvConfig{}
                                         : KvConfig::parse_file(args.config_path);
  ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
  if (args.seed_set) cfg.seed = args.seed;
  if (args.drops > 0) cfg.drops = args.drops;
  return {std::move(kv), std::move(cfg)};
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  cffl::require(!ec, "io-error", "cannot create output directory " + dir);
  std::ofstream os(dir + "/" + name, std::ios::binary);
  cffl::require(os.good(), "io-error", "cannot write " + dir + "/" + name);
  return os;
}

int cmd_simulate(const CommonArgs& args) {
  auto [kv, cfg] = load_config(args);
  const auto [aps, ues] = cffl::place_nodes(cfg.system, cfg.seed);
  const Mat beta = cffl::large_scale_fading(aps, ues, cfg.pathloss, cfg.seed);
  {
    auto os = open_out(args.out_dir, "beta.csv");
    cffl::write_beta_csv(beta, os);
  }

  ExperimentConfig point = cfg;
  point.axis_values = {cfg.mode == cffl::ChainMode::kSyncAdc
                           ? static_cast<double>(cfg.adc_bits)
                           : static_cast<double>(cfg.dac_bits)};
  const cffl::SweepRow row = cffl::run_point(point, 0, 0);
  cffl::require(row.ok, row.error.empty() ? "internal-error" : row.error,
                "simulation failed");

  // Per-UE rates at the configured setting.
  auto os = open_out(args.out_dir, "scenario.csv");
  os << "scenario_id,b,L,K,ue,rate_bps,total_time_s\n";
  const double gain = cffl::aqnm_gain(row.bits, cfg.lloyd_max_table);
  Vec rates;
  if (cfg.mode == cffl::ChainMode::kSyncAdc) {
    const cffl::RateModel model = cffl::adc_rate_model(beta, gain, cfg.system);
    Vec powers = Vec::Constant(cfg.system.num_ues, cfg.system.max_power_w);
    if (cfg.power == cffl::PowerMode::kSca)
      powers = cffl::sca_solve(model, cffl::sync_time_objective(cfg.system),
                               cfg.solver)
                   .powers;
    rates = cffl::true_rates(model, powers);
  } else {
    rates = Vec::Zero(cfg.system.num_ues);  // per-round rates vary; report mean
    rates.setConstant(row.mean_rate_bps);
  }
  for (int k = 0; k < cfg.system.num_ues; ++k)
    os << row.scenario_id << ',' << row.bits << ',' << cfg.system.num_aps << ','
       << cfg.system.num_ues << ',' << k << ',' << fmt(rates(k)) << ','
       << fmt(row.total_time_s) << '\n';
  std::cout << "total_time_s=" << fmt(row.total_time_s) << "\n";
  return 0;
}

int cmd_optimize_power(const CommonArgs& args) {
  auto [kv, cfg] = load_config(args);
  const auto [aps, ues] = cffl::place_nodes(cfg.system, cfg.seed);
  const Mat beta = cffl::large_scale_fading(aps, ues, cfg.pathloss, cfg.seed);

  json summary;
  auto trace_os = open_out(args.out_dir, "power_trace.csv");
  trace_os << "iteration,objective_s\n";
  auto power_os = open_out(args.out_dir, "power.csv");
  power_os << "ue,power_w,rate_bps\n";

  if (cfg.mode == cffl::ChainMode::kSyncAdc) {
    const double alpha = cffl::aqnm_gain(cfg.adc_bits, cfg.lloyd_max_table);
    const cffl::ScaResult result =
        cffl::sca_solve_adc(beta, alpha, cfg.system, cfg.solver);
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
      trace_os << i << ',' << fmt(result.objective_trace[i]) << '\n';
    for (int k = 0; k < cfg.system.num_ues; ++k)
      power_os << k << ',' << fmt(result.powers(k)) << ','
               << fmt(result.rates(k)) << '\n';
    summary["mode"] = "sync-adc";
    summary["total_time_s"] = result.total_time_s;
    summary["converged"] = result.converged;
    summary["iterations"] = result.objective_trace.size() - 1;
  } else {
    const double zeta = cffl::aqnm_gain(cfg.dac_bits, cfg.lloyd_max_table);
    cffl::ScheduleState schedule = cffl::ScheduleState::initial(
        cfg.system.num_ues, cfg.lag_tolerance, cfg.lag_percent);
    std::vector<cffl::MaskMat> masks;
    for (int t = 0; t < cfg.system.rounds; ++t)
      masks.push_back(cffl::advance_schedule(schedule, beta).mask);
    const cffl::DacScaResult result =
        cffl::sca_solve_dac(beta, zeta, masks, cfg.system, cfg.solver);
    for (std::size_t t = 0; t < result.rounds.size(); ++t)
      trace_os << t << ',' << fmt(result.rounds[t].round_time_s) << '\n';
    // Power/rate of the first round's allocation per UE.
    for (int k = 0; k < cfg.system.num_ues; ++k)
      power_os << k << ',' << fmt(result.rounds.front().powers(k)) << ','
               << fmt(result.rounds.front().rates(k)) << '\n';
    summary["mode"] = "async-dac";
    summary["total_time_s"] = result.total_time_s;
    summary["rounds"] = result.rounds.size();
  }

  auto json_os = open_out(args.out_dir, "power.json");
  json_os << summary.dump(2) << '\n';
  std::cout << "total_time_s=" << fmt(summary["total_time_s"].get<double>())
            << "\n";
  return 0;
}

int cmd_dp_check(const CommonArgs& args, double epsilon_flag, double delta_flag,
                 bool run_mc, std::int64_t mc_samples) {
  auto [kv, cfg] = load_config(args);
  if (epsilon_flag > 0.0) cfg.dp.epsilon = epsilon_flag;
  if (delta_flag >= 0.0) cfg.dp.delta = delta_flag;
  cfg.dp.validate();

  const auto [aps, ues] = cffl::place_nodes(cfg.system, cfg.seed);
  const Mat beta = cffl::large_scale_fading(aps, ues, cfg.pathloss, cfg.seed);
  const double alpha = cffl::aqnm_gain(cfg.adc_bits, cfg.lloyd_max_table);
  const Mat amps = cffl::stats_amplitudes(beta);
  const Vec powers = Vec::Constant(cfg.system.num_ues, cfg.system.max_power_w);

  // Worst UE over the configured number of rounds.
  double lambda = 0.0;
  double worst_delta = 0.0, worst_m = 1.0;
  for (int k = 0; k < cfg.system.num_ues; ++k) {
    const double delta_k =
        cffl::sensitivity_adc(powers, alpha, amps, k, cfg.dp_agg);
    const double m_k = cffl::effective_noise_std_adc(
        powers, alpha, beta, cfg.system.noise_power_w, k);
    const double ratio = m_k > 0.0 ? delta_k / m_k : 0.0;
    const double lam_k = cfg.system.rounds * ratio * ratio;
    if (lam_k > lambda) {
      lambda = lam_k;
      worst_delta = delta_k;
      worst_m = m_k;
    }
  }

  double bound = std::numeric_limits<double>::quiet_NaN();
  bool margin_ok = lambda < cfg.dp.epsilon;
  if (margin_ok) bound = cffl::dp_violation_bound(lambda, cfg.dp.epsilon);
  const bool pass = margin_ok && bound < cfg.dp.delta;

  double mc_estimate = std::numeric_limits<double>::quiet_NaN();
  if (run_mc) {
    const std::vector<double> deltas(cfg.system.rounds, worst_delta);
    const std::vector<double> stds(cfg.system.rounds, worst_m);
    mc_estimate = cffl::monte_carlo_violation(deltas, stds, cfg.dp.epsilon,
                                              mc_samples, cfg.seed,
                                              args.workers);
  }

  auto csv = open_out(args.out_dir, "dp_check.csv");
  csv << "epsilon,delta,lambda,bound,pass,mc_estimate\n";
  csv << fmt(cfg.dp.epsilon) << ',' << fmt(cfg.dp.delta) << ',' << fmt(lambda)
      << ',' << fmt(bound) << ',' << (pass ? 1 : 0) << ',' << fmt(mc_estimate)
      << '\n';

  json j;
  j["epsilon"] = cfg.dp.epsilon;
  j["delta"] = cfg.dp.delta;
  j["lambda"] = lambda;
  j["bound"] = margin_ok ? json(bound) : json();
  j["pass"] = pass;
  if (run_mc) j["mc_estimate"] = mc_estimate;
  auto js = open_out(args.out_dir, "dp_check.json");
  js << j.dump(2) << '\n';

  std::cout << (pass ? "pass" : "fail") << " lambda=" << fmt(lambda)
            << " bound=" << fmt(bound) << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  auto [kv, cfg] = load_config(args);

  cffl::TrainScenario scenario;
  scenario.cfg = cfg.system;
  const int dim = kv.get_int("train.dim", 16);
  const int per_ue = kv.get_int("train.samples_per_ue", 32);
  scenario.cfg.grad_dim = dim;
  cffl::Rng data_rng(cffl::Rng(cfg.seed).fork(cffl::streams::kDataset).origin());
  scenario.data = cffl::make_quadratic_dataset(cfg.system.num_ues, per_ue, dim,
                                               data_rng);
  const auto [aps, ues] = cffl::place_nodes(cfg.system, cfg.seed);
  scenario.beta = cffl::large_scale_fading(aps, ues, cfg.pathloss, cfg.seed);
  scenario.adc = cffl::make_quantizer(cfg.adc_bits, cfg.lloyd_max_table);
  scenario.ota.noise = kv.get_bool("train.noise", true);
  scenario.ota.descale_quantizer_gain = kv.get_bool("train.descale_gain", true);
  scenario.async = cfg.mode == cffl::ChainMode::kAsyncDac;
  scenario.schedule = cffl::ScheduleState::initial(
      cfg.system.num_ues, cfg.lag_tolerance, cfg.lag_percent);
  scenario.drop_stale = kv.get_bool("train.drop_stale", false);
  scenario.dp = cfg.dp;
  scenario.dp_agg = cfg.dp_agg;
  scenario.rounds = cfg.system.rounds;
  scenario.learning_rate = cfg.system.learning_rate;

  if (cfg.power == cffl::PowerMode::kSca) {
    const double alpha = scenario.adc.gain;
    scenario.powers =
        cffl::sca_solve_adc(scenario.beta, alpha, cfg.system, cfg.solver).powers;
  } else {
    scenario.powers = Vec::Constant(cfg.system.num_ues, cfg.system.max_power_w);
  }

  const auto trace = cffl::run_training(scenario, cfg.seed);
  auto os = open_out(args.out_dir, "train_trace.csv");
  os << "round,loss,gap,bound,lambda,served_count\n";
  for (const auto& row : trace)
    os << row.round << ',' << fmt(row.loss) << ',' << fmt(row.gap) << ','
       << fmt(row.bound) << ',' << fmt(row.lambda) << ',' << row.served << '\n';
  std::cout << "final_gap=" << fmt(trace.back().gap) << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  auto [kv, cfg] = load_config(args);
  const cffl::SweepTable table = cffl::run_sweep(cfg, args.workers);
  const auto files = cffl::emit_results(table, args.out_dir, args.format, "sweep");
  for (const auto& f : files) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free massive MIMO federated-learning uplink laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  double epsilon_flag = 0.0;
  double delta_flag = -1.0;
  bool run_mc = false;
  std::int64_t mc_samples = 1000000;

  const auto add_common = [&](CLI::App* sub, bool with_format = true) {
    sub->add_option("--config", args.config_path, "scenario config file");
    sub->add_option("--seed", args.seed, "root seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_option("--out", args.out_dir, "output directory");
    if (with_format)
      sub->add_option("--format", args.format, "csv|svg")
          ->check(CLI::IsMember({"csv", "svg"}));
    sub->add_option("--drops", args.drops, "channel drops per sweep point");
    sub->add_option("--workers", args.workers, "worker thread count");
  };

  auto* simulate = app.add_subcommand("simulate", "one scenario end to end");
  add_common(simulate);
  auto* optimize = app.add_subcommand("optimize-power", "SCA power control");
  add_common(optimize);
  auto* dp_check = app.add_subcommand("dp-check", "privacy budget check");
  add_common(dp_check);
  dp_check->add_option("--epsilon", epsilon_flag, "privacy epsilon override");
  dp_check->add_option("--delta", delta_flag, "privacy delta override");
  dp_check->add_flag("--mc", run_mc, "run the Monte Carlo validation");
  dp_check->add_option("--mc-samples", mc_samples, "Monte Carlo sample count");
  auto* train = app.add_subcommand("train", "FL training trace");
  add_common(train);
  auto* sweep = app.add_subcommand("sweep", "batch sweep over one axis");
  add_common(sweep);

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cmd_simulate(args);
    if (optimize->parsed()) return cmd_optimize_power(args);
    if (dp_check->parsed())
      return cmd_dp_check(args, epsilon_flag, delta_flag, run_mc, mc_samples);
    if (train->parsed()) return cmd_train(args);
    if (sweep->parsed()) return cmd_sweep(args);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const cffl::Error& e) {
    nlohmann::json err;
    err["error"]["code"] = e.code();
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"]["code"] = "internal-error";
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }
}
