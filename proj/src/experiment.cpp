#include "cffl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "cffl/fl.hpp"
#include "cffl/quantization.hpp"
#include "cffl/scheduler.hpp"

namespace cffl {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kBits: return "bits";
    case SweepAxis::kNumAps: return "num_aps";
    case SweepAxis::kNumUes: return "num_ues";
    case SweepAxis::kLagTolerance: return "lag_tolerance";
    case SweepAxis::kLagPercent: return "lag_percent";
  }
  return "?";
}

std::string to_string(ChainMode mode) {
  return mode == ChainMode::kSyncAdc ? "sync-adc" : "async-dac";
}

std::string to_string(PowerMode mode) {
  return mode == PowerMode::kSca ? "sca" : "full";
}

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
  ExperimentConfig cfg;
  auto& sys = cfg.system;
  sys.num_aps = kv.get_int("system.num_aps", sys.num_aps);
  sys.num_ues = kv.get_int("system.num_ues", sys.num_ues);
  sys.area_km = kv.get_double("system.area_km", sys.area_km);
  sys.noise_power_w = kv.get_double("system.noise_power_w", sys.noise_power_w);
  sys.bandwidth_hz = kv.get_double("system.bandwidth_hz", sys.bandwidth_hz);
  sys.pilot_len = kv.get_int("system.pilot_len", sys.pilot_len);
  sys.block_len = kv.get_int("system.block_len", sys.block_len);
  sys.grad_dim = kv.get_int("system.grad_dim", sys.grad_dim);
  sys.max_power_w = kv.get_double("system.max_power_w", sys.max_power_w);
  sys.update_bits = kv.get_double("system.update_bits", sys.update_bits);
  sys.rounds = kv.get_int("system.rounds", sys.rounds);
  sys.learning_rate = kv.get_double("system.learning_rate", sys.learning_rate);

  auto& pl = cfg.pathloss;
  pl.freq_mhz = kv.get_double("pathloss.freq_mhz", pl.freq_mhz);
  pl.ap_height_m = kv.get_double("pathloss.ap_height_m", pl.ap_height_m);
  pl.ue_height_m = kv.get_double("pathloss.ue_height_m", pl.ue_height_m);
  pl.inner_break_km = kv.get_double("pathloss.inner_break_km", pl.inner_break_km);
  pl.outer_break_km = kv.get_double("pathloss.outer_break_km", pl.outer_break_km);
  pl.shadow_std_db = kv.get_double("pathloss.shadow_std_db", pl.shadow_std_db);
  pl.shadowing = kv.get_bool("pathloss.shadowing", pl.shadowing);

  cfg.adc_bits = kv.get_int("adc.bits", cfg.adc_bits);
  cfg.dac_bits = kv.get_int("dac.bits", cfg.dac_bits);
  cfg.lloyd_max_table = kv.get_bool("adc.lloyd_max_table", cfg.lloyd_max_table);
  cfg.lag_percent = kv.get_double("schedule.lag_percent", cfg.lag_percent);
  cfg.lag_tolerance = kv.get_int("schedule.lag_tolerance", cfg.lag_tolerance);

  cfg.dp.epsilon = kv.get_double("dp.epsilon", cfg.dp.epsilon);
  cfg.dp.delta = kv.get_double("dp.delta", cfg.dp.delta);
  const std::string agg = kv.get_string("dp.aggregation", "sum");
  require(agg == "sum" || agg == "per-ap", "io-error",
          "dp.aggregation must be sum or per-ap");
  cfg.dp_agg = agg == "sum" ? ApAggregation::kSumOverAps : ApAggregation::kPerAp;

  const std::string axis = kv.get_string("sweep.axis", "bits");
  if (axis == "bits") cfg.axis = SweepAxis::kBits;
  else if (axis == "num_aps") cfg.axis = SweepAxis::kNumAps;
  else if (axis == "num_ues") cfg.axis = SweepAxis::kNumUes;
  else if (axis == "lag_tolerance") cfg.axis = SweepAxis::kLagTolerance;
  else if (axis == "lag_percent") cfg.axis = SweepAxis::kLagPercent;
  else fail("io-error", "unknown sweep.axis: " + axis);

  cfg.axis_values = kv.get_list("sweep.values", cfg.axis_values);
  cfg.drops = kv.get_int("sweep.drops", cfg.drops);

  const std::string mode = kv.get_string("sweep.mode", "sync-adc");
  require(mode == "sync-adc" || mode == "async-dac", "io-error",
          "sweep.mode must be sync-adc or async-dac");
  cfg.mode = mode == "sync-adc" ? ChainMode::kSyncAdc : ChainMode::kAsyncDac;

  const std::string power = kv.get_string("sweep.power", "sca");
  require(power == "sca" || power == "full", "io-error",
          "sweep.power must be sca or full");
  cfg.power = power == "sca" ? PowerMode::kSca : PowerMode::kFull;

  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.solver.tolerance_s = kv.get_double("solver.tolerance_s", cfg.solver.tolerance_s);
  cfg.solver.max_outer_iters =
      kv.get_int("solver.max_outer_iters", cfg.solver.max_outer_iters);
  cfg.config_hash = kv.hash();
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  system.validate();
  require(!axis_values.empty(), "invalid-argument", "sweep axis values are empty");
  require(drops >= 1, "invalid-argument", "drop count must be >= 1");
  require(adc_bits >= 1 && dac_bits >= 1, "invalid-argument",
          "bit depths must be >= 1");
  dp.validate();
}

ExperimentConfig ExperimentConfig::at_axis_value(double value) const {
  ExperimentConfig pinned = *this;
  switch (axis) {
    case SweepAxis::kBits:
      pinned.adc_bits = pinned.dac_bits = static_cast<int>(value);
      break;
    case SweepAxis::kNumAps:
      pinned.system.num_aps = static_cast<int>(value);
      break;
    case SweepAxis::kNumUes:
      pinned.system.num_ues = static_cast<int>(value);
      break;
    case SweepAxis::kLagTolerance:
      pinned.lag_tolerance = static_cast<int>(value);
      break;
    case SweepAxis::kLagPercent:
      pinned.lag_percent = value;
      break;
  }
  return pinned;
}

SweepRow run_point(const ExperimentConfig& cfg, int axis_index, int drop) {
  SweepRow row;
  row.config_hash = cfg.config_hash;
  row.axis = to_string(cfg.axis);
  row.axis_value = cfg.axis_values.empty() ? 0.0 : cfg.axis_values[axis_index];
  row.drop = drop;
  row.bits = cfg.mode == ChainMode::kSyncAdc ? cfg.adc_bits : cfg.dac_bits;
  row.num_aps = cfg.system.num_aps;
  row.num_ues = cfg.system.num_ues;
  row.mode = to_string(cfg.mode);
  row.power = to_string(cfg.power);
  row.scenario_id = row.axis + "-" + fmt_double(row.axis_value) + "-d" +
                    std::to_string(drop);
  row.seed = Rng(cfg.seed)
                 .fork(streams::kSweep, static_cast<std::uint64_t>(axis_index),
                       static_cast<std::uint64_t>(drop))
                 .origin();
  try {
    const auto [aps, ues] = place_nodes(cfg.system, row.seed);
    const Mat beta = large_scale_fading(aps, ues, cfg.pathloss, row.seed);
    const int rounds = cfg.system.rounds;
    const Mat amps = stats_amplitudes(beta);

    if (cfg.mode == ChainMode::kSyncAdc) {
      const double alpha = aqnm_gain(cfg.adc_bits, cfg.lloyd_max_table);
      const RateModel model = adc_rate_model(beta, alpha, cfg.system);
      const TimeObjective objective = sync_time_objective(cfg.system);
      Vec powers;
      if (cfg.power == PowerMode::kSca) {
        powers = sca_solve(model, objective, cfg.solver).powers;
      } else {
        powers = Vec::Constant(cfg.system.num_ues, cfg.system.max_power_w);
      }
      const Vec rates = true_rates(model, powers);
      row.total_time_s = true_total_time(model, objective, powers);
      row.mean_rate_bps = rates.mean();
      row.min_rate_bps = rates.minCoeff();

      double lambda_max = 0.0;
      for (int k = 0; k < cfg.system.num_ues; ++k) {
        const double delta = sensitivity_adc(powers, alpha, amps, k, cfg.dp_agg);
        const double m_k = effective_noise_std_adc(powers, alpha, beta,
                                                   cfg.system.noise_power_w, k);
        const double ratio = m_k > 0.0 ? delta / m_k : 0.0;
        lambda_max = std::max(lambda_max, rounds * ratio * ratio);
      }
      row.lambda = lambda_max;
    } else {
      const double zeta = aqnm_gain(cfg.dac_bits, cfg.lloyd_max_table);
      ScheduleState schedule = ScheduleState::initial(
          cfg.system.num_ues, cfg.lag_tolerance, cfg.lag_percent);
      std::vector<MaskMat> masks;
      masks.reserve(rounds);
      for (int t = 0; t < rounds; ++t)
        masks.push_back(advance_schedule(schedule, beta).mask);

      const DacScaResult result =
          cfg.power == PowerMode::kSca
              ? sca_solve_dac(beta, zeta, masks, cfg.system, cfg.solver)
              : full_power_dac(beta, zeta, masks, cfg.system);
      row.total_time_s = result.total_time_s;

      double rate_sum = 0.0, rate_min = std::numeric_limits<double>::infinity();
      long served_count = 0;
      std::vector<double> nu(cfg.system.num_aps, 0.0);
      for (const DacRound& round : result.rounds) {
        for (int k = 0; k < cfg.system.num_ues; ++k) {
          if (round.rates(k) <= 0.0) continue;
          rate_sum += round.rates(k);
          rate_min = std::min(rate_min, round.rates(k));
          ++served_count;
        }
        for (int l = 0; l < cfg.system.num_aps; ++l) {
          const Vec amps_l = amps.row(l).transpose();
          const Eigen::VectorXi mask_l = round.mask.row(l).transpose();
          const double delta = sensitivity_dac(round.powers, amps_l);
          const double sigma = effective_noise_std_dac(
              round.powers, zeta, amps_l, mask_l, cfg.system.noise_power_w);
          if (delta > 0.0) nu[l] += (delta / sigma) * (delta / sigma);
        }
      }
      row.mean_rate_bps = served_count > 0 ? rate_sum / served_count : 0.0;
      row.min_rate_bps = served_count > 0 ? rate_min : 0.0;
      row.lambda = *std::max_element(nu.begin(), nu.end());
    }

    try {
      row.dp_bound = dp_violation_bound(row.lambda, cfg.dp.epsilon);
    } catch (const Error& e) {
      if (e.code() != "margin-violation") throw;
      row.dp_bound = kNan;
    }
    row.ok = true;
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.code();
    row.total_time_s = row.mean_rate_bps = row.min_rate_bps = kNan;
    row.lambda = row.dp_bound = kNan;
  }
  return row;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int nthreads = std::max(1, std::min(workers, count));
  if (nthreads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int w = 0; w < nthreads; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

SweepTable run_sweep(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  const int n_axis = static_cast<int>(cfg.axis_values.size());
  const int count = n_axis * cfg.drops;
  SweepTable table;
  table.rows.resize(count);

  parallel_for(count, workers, [&](int task) {
    const int axis_index = task / cfg.drops;
    const int drop = task % cfg.drops;
    const ExperimentConfig pinned =
        cfg.at_axis_value(cfg.axis_values[axis_index]);
    table.rows[task] = run_point(pinned, axis_index, drop);
  });

  const bool any_ok = std::any_of(table.rows.begin(), table.rows.end(),
                                  [](const SweepRow& r) { return r.ok; });
  require(any_ok, "sweep-error", "every sweep point failed");
  return table;
}

double mean_time_at(const SweepTable& table, double axis_value) {
  double sum = 0.0;
  int n = 0;
  for (const SweepRow& row : table.rows) {
    if (!row.ok || row.axis_value != axis_value) continue;
    sum += row.total_time_s;
    ++n;
  }
  require(n > 0, "invalid-argument", "no successful rows at that axis value");
  return sum / n;
}

namespace {

void write_csv(const SweepTable& table, std::ostream& os) {
  os << "scenario_id,config_hash,seed,axis,axis_value,drop,bits,num_aps,"
        "num_ues,mode,power,ok,error,total_time_s,mean_rate_bps,min_rate_bps,"
        "lambda,dp_bound\n";
  for (const SweepRow& r : table.rows) {
    os << r.scenario_id << ',' << fmt_hex(r.config_hash) << ',' << r.seed << ','
       << r.axis << ',' << fmt_double(r.axis_value) << ',' << r.drop << ','
       << r.bits << ',' << r.num_aps << ',' << r.num_ues << ',' << r.mode << ','
       << r.power << ',' << (r.ok ? 1 : 0) << ',' << r.error << ','
       << fmt_double(r.total_time_s) << ',' << fmt_double(r.mean_rate_bps)
       << ',' << fmt_double(r.min_rate_bps) << ',' << fmt_double(r.lambda)
       << ',' << fmt_double(r.dp_bound) << '\n';
  }
}

void write_svg(const SweepTable& table, std::ostream& os) {
  // Mean time per axis value, in first-appearance order.
  std::vector<double> xs, ys;
  for (const SweepRow& r : table.rows) {
    if (!r.ok) continue;
    if (std::find(xs.begin(), xs.end(), r.axis_value) == xs.end())
      xs.push_back(r.axis_value);
  }
  std::sort(xs.begin(), xs.end());
  for (double x : xs) ys.push_back(mean_time_at(table, x));
  require(!xs.empty(), "invalid-argument", "nothing to plot");

  const double w = 640, h = 400, ml = 70, mr = 20, mt = 30, mb = 50;
  double x_lo = xs.front(), x_hi = xs.back();
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  double y_lo = *std::min_element(ys.begin(), ys.end());
  double y_hi = *std::max_element(ys.begin(), ys.end());
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  const auto px = [&](double x) {
    return ml + (x - x_lo) / (x_hi - x_lo) * (w - ml - mr);
  };
  const auto py = [&](double y) {
    return h - mb - (y - y_lo) / (y_hi - y_lo) * (h - mt - mb);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">"
     << table.rows.front().axis << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << (mt + h - mb) / 2 << ")\">mean uplink time (s)</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    char label[40];
    std::snprintf(label, sizeof(label), "%.6g", xs[i]);
    os << "<text x=\"" << px(xs[i]) << "\" y=\"" << h - mb + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << label << "</text>\n";
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = y_lo + (y_hi - y_lo) * tick / 4.0;
    char label[40];
    std::snprintf(label, sizeof(label), "%.4g", y);
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(y) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << px(xs[i]) << ',' << py(ys[i]) << ' ';
  os << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i])
       << "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
  os << "</svg>\n";
}

}  // namespace

std::vector<std::string> emit_results(const SweepTable& table,
                                      const std::string& out_dir,
                                      const std::string& format,
                                      const std::string& stem) {
  require(!table.rows.empty(), "invalid-argument", "empty result table");
  require(format == "csv" || format == "svg", "invalid-argument",
          "format must be csv or svg");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, "io-error", "cannot create output directory " + out_dir);

  std::vector<std::string> written;
  const std::string csv_path = out_dir + "/" + stem + ".csv";
  {
    std::ofstream os(csv_path, std::ios::binary);
    require(os.good(), "io-error", "cannot write " + csv_path);
    write_csv(table, os);
  }
  written.push_back(csv_path);

  if (format == "svg") {
    const std::string svg_path = out_dir + "/" + stem + ".svg";
    std::ofstream os(svg_path, std::ios::binary);
    require(os.good(), "io-error", "cannot write " + svg_path);
    write_svg(table, os);
    written.push_back(svg_path);
  }
  return written;
}

}  // namespace cffl
