/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qkdrate/qkdrate.hpp"

namespace {

using namespace qkd;

std::string fmt9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

const char* fmt_bool(bool v) { return v ? "true" : "false"; }

constexpr const char* kCsvHeader =
    "param,b,p,eps,constraints,eve,cliff_sum,keyrate,r,leak,p_pass,cert_lb,gap,converged,"
    "wall_time_ms";

struct ResultRow {
  double param = std::numeric_limits<double>::quiet_NaN();  // swept grid value
  ScenarioConfig config;
  KeyRateResult result;
  double wall_time_ms = 0.0;
  bool failed = false;        // solve threw; result fields are unset
  std::string error;

  std::string cliff_sum_label() const {
    return config.eve_mode == EveMode::CliffordMix ? to_string(config.cliff_sum_mode) : "-";
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << (std::isnan(param) ? "" : fmt9(param)) << ',' << fmt9(config.b) << ','
       << fmt9(config.p) << ',' << fmt9(config.eps) << ',' << to_string(config.constraint_mode)
       << ',' << to_string(config.eve_mode) << ',' << cliff_sum_label() << ','
       << fmt9(result.keyrate) << ',' << fmt9(result.r) << ',' << fmt9(result.leak) << ','
       << fmt9(result.p_pass) << ',' << fmt9(result.certificate_lb) << ',' << fmt9(result.gap)
       << ',' << fmt_bool(!failed && result.converged) << ',' << fmt9(wall_time_ms);
    return os.str();
  }

  std::string to_json() const {
    std::ostringstream os;
    os << "{\"b\":" << fmt9(config.b) << ",\"p\":" << fmt9(config.p)
       << ",\"eps\":" << fmt9(config.eps) << ",\"constraints\":\""
       << to_string(config.constraint_mode) << "\",\"eve\":\"" << to_string(config.eve_mode)
       << "\",\"cliff_sum\":\"" << cliff_sum_label() << "\"";
    if (!std::isnan(param)) os << ",\"param\":" << fmt9(param);
    os << ",\"keyrate\":" << fmt9(result.keyrate) << ",\"r\":" << fmt9(result.r)
       << ",\"leak\":" << fmt9(result.leak) << ",\"p_pass\":" << fmt9(result.p_pass)
       << ",\"cert_lb\":" << fmt9(result.certificate_lb) << ",\"gap\":" << fmt9(result.gap)
       << ",\"converged\":" << fmt_bool(!failed && result.converged)
       << ",\"iterations\":" << result.iterations
       << ",\"perturbation\":" << fmt9(result.perturbation);
    if (failed) os << ",\"error\":\"" << error << "\"";
    else if (!result.converged) os << ",\"error\":\"non-convergence\"";
    os << ",\"wall_time_ms\":" << fmt9(wall_time_ms) << "}";
    return os.str();
  }
};

ResultRow run_one(const ScenarioConfig& config, const SolverOptions& opts) {
  ResultRow row;
  row.config = config;
  const auto start = std::chrono::steady_clock::now();
  try {
    ConstraintSet cs = simulate_constraints(config);
    if (config.eve_mode == EveMode::Unrestricted) {
      row.result = solve_unrestricted(cs, config.p, opts).second;
    } else {
      row.result =
          solve_restricted(cs, config.p, config.b, config.cliff_sum_mode, opts).result;
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
  }
  row.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return row;
}

struct OutputTarget {
  std::string path;  // empty -> stdout

  void write(const std::string& content) const {
    if (path.empty()) {
      std::cout << content;
      std::cout.flush();
      return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << content;
  }
};

struct CommonFlags {
  double b = 0.5, p = 0.5, eps = 0.0;
  std::string constraints = "fine";
  std::string eve = "unrestricted";
  std::string cliff_sum = "eq3";
  double mu_final = 1e-8;
  std::uint64_t seed = 0;
  std::string out;
  std::string format;

  void add_to(CLI::App* cmd, bool multi_mode) {
    cmd->add_option("--b", b, "Source asymmetry parameter")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--p", p, "Z-basis probability");
    cmd->add_option("--eps", eps, "Depolarizing probability")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--constraints", constraints, "Channel reconciliation granularity")
        ->check(CLI::IsMember(multi_mode
                                  ? std::vector<std::string>{"coarse", "fine", "both"}
                                  : std::vector<std::string>{"coarse", "fine"}));
    cmd->add_option("--eve", eve, "Eavesdropper model")
        ->check(CLI::IsMember(multi_mode
                                  ? std::vector<std::string>{"unrestricted", "clifford-mix",
                                                             "both"}
                                  : std::vector<std::string>{"unrestricted", "clifford-mix"}));
    cmd->add_option("--cliff-sum", cliff_sum, "Normalization mode of the Clifford mixture")
        ->check(CLI::IsMember(std::vector<std::string>{"eq3", "le3", "both"}));
    cmd->add_option("--mu-final", mu_final, "Final barrier weight")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Random seed echoed into derived runs");
    cmd->add_option("--out", out, "Write output to a file instead of stdout");
    cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember(std::vector<std::string>{"json", "csv"}));
  }

  SolverOptions solver_options() const {
    SolverOptions opts;
    opts.mu_final = mu_final;
    opts.seed = seed;
    return opts;
  }
};

ScenarioConfig base_config(const CommonFlags& flags) {
  ScenarioConfig cfg;
  cfg.b = flags.b;
  cfg.p = flags.p;
  cfg.eps = flags.eps;
  cfg.constraint_mode = flags.constraints == "coarse" ? ConstraintMode::Coarse
                                                      : ConstraintMode::Fine;
  cfg.eve_mode = flags.eve == "clifford-mix" ? EveMode::CliffordMix : EveMode::Unrestricted;
  cfg.cliff_sum_mode = flags.cliff_sum == "le3" ? CliffSumMode::Le3 : CliffSumMode::Eq3;
  return cfg;
}

int cmd_solve(const CommonFlags& flags) {
  if (flags.constraints == "both" || flags.eve == "both" || flags.cliff_sum == "both") {
    std::cerr << "solve: 'both' is only available for sweep\n";
    return 2;
  }
  ScenarioConfig cfg = base_config(flags);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "solve: " << e.what() << "\n";
    return 2;
  }
  ResultRow row = run_one(cfg, flags.solver_options());
  OutputTarget target{flags.out};
  if (flags.format == "csv") {
    target.write(std::string(kCsvHeader) + "\n" + row.to_csv() + "\n");
  } else {
    target.write(row.to_json() + "\n");
  }
  if (row.failed || !row.result.converged) return 1;
  return 0;
}

struct SweepFlags {
  std::string param = "eps";
  double from = 0.0, to = 0.1;
  int steps = 11;
  std::string plot;
};

int cmd_sweep(const CommonFlags& flags, const SweepFlags& sweep) {
  if (sweep.steps < 2) {
    std::cerr << "sweep: need at least 2 steps\n";
    return 2;
  }
  if (!(sweep.from < sweep.to)) {
    std::cerr << "sweep: require from < to\n";
    return 2;
  }

  std::vector<ConstraintMode> cms;
  if (flags.constraints == "coarse" || flags.constraints == "both")
    cms.push_back(ConstraintMode::Coarse);
  if (flags.constraints == "fine" || flags.constraints == "both")
    cms.push_back(ConstraintMode::Fine);
  std::vector<EveMode> ems;
  if (flags.eve == "unrestricted" || flags.eve == "both") ems.push_back(EveMode::Unrestricted);
  if (flags.eve == "clifford-mix" || flags.eve == "both") ems.push_back(EveMode::CliffordMix);
  std::vector<CliffSumMode> sums;
  if (flags.cliff_sum == "eq3" || flags.cliff_sum == "both") sums.push_back(CliffSumMode::Eq3);
  if (flags.cliff_sum == "le3" || flags.cliff_sum == "both") sums.push_back(CliffSumMode::Le3);

  std::vector<ScenarioConfig> jobs;
  std::vector<double> job_param;
  for (int i = 0; i < sweep.steps; ++i) {
    const double value =
        sweep.from + (sweep.to - sweep.from) * static_cast<double>(i) / (sweep.steps - 1);
    ScenarioConfig cfg = base_config(flags);
    if (sweep.param == "eps") {
      cfg.eps = value;
    } else {
      cfg.b = value;
    }
    for (EveMode em : ems)
      for (ConstraintMode cm : cms) {
        cfg.eve_mode = em;
        cfg.constraint_mode = cm;
        if (em == EveMode::CliffordMix) {
          for (CliffSumMode sm : sums) {
            cfg.cliff_sum_mode = sm;
            jobs.push_back(cfg);
            job_param.push_back(value);
          }
        } else {
          cfg.cliff_sum_mode = CliffSumMode::Eq3;
          jobs.push_back(cfg);
          job_param.push_back(value);
        }
      }
  }
  try {
    for (auto& job : jobs) job.validate();
  } catch (const std::exception& e) {
    std::cerr << "sweep: " << e.what() << "\n";
    return 2;
  }

  // One solver instance per row; rows are independent and emitted in grid order.
  std::vector<ResultRow> rows(jobs.size());
  const SolverOptions opts = flags.solver_options();
  std::atomic<std::size_t> next{0};
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
        rows[i] = run_one(jobs[i], opts);
        rows[i].param = job_param[i];
      }
    });
  for (auto& t : pool) t.join();

  std::ostringstream os;
  if (flags.format == "json") {
    os << "[";
    for (std::size_t i = 0; i < rows.size(); ++i) os << (i ? ",\n " : "\n ") << rows[i].to_json();
    os << "\n]\n";
  } else {
    os << kCsvHeader << "\n";
    for (const auto& row : rows) os << row.to_csv() << "\n";
  }
  OutputTarget{flags.out}.write(os.str());

  if (!sweep.plot.empty()) {
    // Companion file with one gnuplot-ready column per curve.
    const bool has_uc = flags.eve != "clifford-mix" && flags.constraints != "fine";
    const bool has_uf = flags.eve != "clifford-mix" && flags.constraints != "coarse";
    const bool has_r = flags.eve != "unrestricted";
    std::ostringstream ps;
    ps << "# " << sweep.param;
    if (has_uc) ps << " k_unrestricted_coarse";
    if (has_uf) ps << " k_unrestricted_fine";
    if (has_r) ps << " k_restricted";
    ps << "\n";
    auto find_row = [&](double value, EveMode em, ConstraintMode cm) -> const ResultRow* {
      for (const auto& row : rows) {
        if (row.param != value) continue;
        if (row.config.eve_mode != em || row.config.constraint_mode != cm) continue;
        if (em == EveMode::CliffordMix && row.config.cliff_sum_mode != sums.front()) continue;
        return &row;
      }
      return nullptr;
    };
    for (int i = 0; i < sweep.steps; ++i) {
      const double value =
          sweep.from + (sweep.to - sweep.from) * static_cast<double>(i) / (sweep.steps - 1);
      ps << fmt9(value);
      if (has_uc) {
        const ResultRow* r = find_row(value, EveMode::Unrestricted, ConstraintMode::Coarse);
        ps << ' ' << (r && !r->failed ? fmt9(r->result.keyrate) : "nan");
      }
      if (has_uf) {
        const ResultRow* r = find_row(value, EveMode::Unrestricted, ConstraintMode::Fine);
        ps << ' ' << (r && !r->failed ? fmt9(r->result.keyrate) : "nan");
      }
      if (has_r) {
        const ResultRow* r = find_row(value, EveMode::CliffordMix, cms.front());
        ps << ' ' << (r && !r->failed ? fmt9(r->result.keyrate) : "nan");
      }
      ps << "\n";
    }
    OutputTarget{sweep.plot}.write(ps.str());
  }

  for (const auto& row : rows)
    if (!row.failed && row.result.converged) return 0;
  return 1;
}

int cmd_enumerate(const CommonFlags& flags) {
  std::ostringstream os;
  os << "perm,signs,valid,q,k_clifford,k_worst\n";
  for (const AttackRecord& rec : enumerate_attacks()) {
    os << rec.sp.perm_string() << ',' << rec.sp.sign_string() << ',' << fmt_bool(rec.valid)
       << ',' << fmt9(rec.q) << ',' << fmt9(rec.clifford_keyrate) << ','
       << fmt9(rec.worst_case_keyrate) << "\n";
  }
  OutputTarget{flags.out}.write(os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BB84 secret-key-rate lower bounds for unrestricted and "
               "Clifford-restricted eavesdroppers"};
  app.require_subcommand(1);

  CommonFlags solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "Solve one scenario; prints a JSON result");
  solve_flags.add_to(solve, false);

  CommonFlags sweep_common;
  SweepFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep a parameter; prints CSV rows");
  sweep_common.add_to(sweep, true);
  sweep->add_option("--param", sweep_flags.param, "Parameter to sweep")
      ->check(CLI::IsMember(std::vector<std::string>{"eps", "b"}));
  sweep->add_option("--from", sweep_flags.from, "Grid start (inclusive)");
  sweep->add_option("--to", sweep_flags.to, "Grid end (inclusive)");
  sweep->add_option("--steps", sweep_flags.steps, "Number of grid points");
  sweep->add_option("--plot", sweep_flags.plot, "Companion file with one column per curve");

  CommonFlags enum_flags;
  CLI::App* enumerate = app.add_subcommand("enumerate", "Tabulate all single-Clifford attacks");
  enumerate->add_option("--out", enum_flags.out, "Write output to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage/diagnostic
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_common, sweep_flags);
    return cmd_enumerate(enum_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
