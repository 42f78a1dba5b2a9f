#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "binsim/config.hpp"
#include "binsim/harness.hpp"
#include "binsim/verify.hpp"

namespace {

struct FlagOverrides {
  std::vector<std::string> overrides;
  std::string n, balls, k, m, policy, offer, alpha, delta, capital_c, trials, seed, threads;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--override", overrides, "key=value, wins over the config file (repeatable)");
    cmd->add_option("--n", n, "bins (problem.n)");
    cmd->add_option("--balls", balls, "balls to place (problem.balls)");
    cmd->add_option("--k", k, "choices per ball (problem.k)");
    cmd->add_option("--m", m, "memory budget in bits (problem.m)");
    cmd->add_option("--policy", policy, "placement policy (policy.kind)");
    cmd->add_option("--offer", offer, "offer mode (offer.mode)");
    cmd->add_option("--alpha", alpha, "density of bernoulli offers (offer.alpha)");
    cmd->add_option("--delta", delta, "matching slack parameter (policy.delta)");
    cmd->add_option("--capital-c", capital_c, "budget constant (policy.capital_c)");
    cmd->add_option("--trials", trials, "trial count (run.trials)");
    cmd->add_option("--seed", seed, "base seed (run.seed)");
    cmd->add_option("--threads", threads, "parallel trial workers (run.threads)");
  }

  void apply(binsim::Config& cfg) const {
    for (const auto& o : overrides) cfg.set_override(o);
    auto put = [&cfg](const char* key, const std::string& v) {
      if (!v.empty()) cfg.set(key, v);
    };
    put("problem.n", n);
    put("problem.balls", balls);
    put("problem.k", k);
    put("problem.m", m);
    put("policy.kind", policy);
    put("offer.mode", offer);
    put("offer.alpha", alpha);
    put("policy.delta", delta);
    put("policy.capital_c", capital_c);
    put("run.trials", trials);
    put("run.seed", seed);
    put("run.threads", threads);
  }
};

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw binsim::config_error("cannot open output file: " + path);
  return file;
}

void print_warnings(const std::vector<std::string>& warnings) {
  std::vector<std::string> seen;
  for (const auto& w : warnings) {
    if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
    seen.push_back(w);
    std::cerr << "warning: " << w << "\n";
  }
}

void print_bound_line(const char* name, const char* formula,
                      const std::optional<double>& value) {
  std::printf("  %-22s %-34s ", name, formula);
  if (value)
    std::printf("= %.6g\n", *value);
  else
    std::printf("unavailable (outside the formula's domain)\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binsim: memory-bounded balls-into-bins placement simulator"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run one experiment, emit per-trial CSV");
  std::string run_config, run_out;
  FlagOverrides run_flags;
  run_cmd->add_option("--config", run_config, "flat key=value config file")->required();
  run_cmd->add_option("--out", run_out, "write CSV here instead of stdout");
  run_flags.add_common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "run a config grid, emit summary CSV");
  std::string sweep_config, sweep_grid, sweep_out;
  FlagOverrides sweep_flags;
  sweep_cmd->add_option("--config", sweep_config, "base config file")->required();
  sweep_cmd->add_option("--grid", sweep_grid, "grid file: key = v1,v2,... per axis")->required();
  sweep_cmd->add_option("--out", sweep_out, "write CSV here instead of stdout");
  sweep_flags.add_common(sweep_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
  bool quick = false;
  std::uint64_t verify_threads = 0;
  verify_cmd->add_flag("--quick", quick, "reduced trial counts");
  verify_cmd->add_option("--threads", verify_threads, "parallel trial workers");

  auto* bounds_cmd = app.add_subcommand("bounds", "print reference bound values");
  std::uint64_t bn = 0, bk = 1, bm = 0, bt = 0;
  bounds_cmd->add_option("--n", bn, "bins")->required();
  bounds_cmd->add_option("--k", bk, "choices per ball")->required();
  bounds_cmd->add_option("--m", bm, "memory budget in bits")->required();
  bounds_cmd->add_option("--t", bt, "round for the collision floor (default n)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      binsim::Config cfg = binsim::Config::from_file(run_config);
      run_flags.apply(cfg);
      binsim::ExperimentConfig ecfg = binsim::parse_experiment(cfg);
      binsim::ExperimentResult res = binsim::run_experiment(ecfg);
      print_warnings(res.warnings);
      std::ofstream file;
      binsim::write_run_csv(open_out(run_out, file), ecfg, res);
      return 0;
    }
    if (sweep_cmd->parsed()) {
      binsim::Config base = binsim::Config::from_file(sweep_config);
      sweep_flags.apply(base);
      binsim::Config grid = binsim::Config::from_file(sweep_grid);
      std::vector<std::string> warnings;
      std::ofstream file;
      binsim::run_sweep(base, grid, open_out(sweep_out, file), &warnings);
      print_warnings(warnings);
      return 0;
    }
    if (verify_cmd->parsed()) {
      unsigned hw = std::thread::hardware_concurrency();
      unsigned threads = verify_threads ? static_cast<unsigned>(verify_threads) : (hw ? hw : 1);
      return binsim::print_acceptance(std::cout, quick, threads);
    }
    if (bounds_cmd->parsed()) {
      binsim::ProblemSize p{bn, 0, bk, bm};
      binsim::BoundReport r = binsim::theoretical_bounds(p);
      std::uint64_t t = bt ? bt : bn;
      std::printf("reference bounds for n=%llu k=%llu m=%llu\n",
                  static_cast<unsigned long long>(bn), static_cast<unsigned long long>(bk),
                  static_cast<unsigned long long>(bm));
      std::printf("  (asymptotic guides with constants suppressed; orientation only)\n");
      print_bound_line("one_choice_max_load", "ln n / ln ln n", r.one_choice_max_load);
      print_bound_line("greedy_max_load", "ln ln n / ln k", r.greedy_max_load);
      print_bound_line("max_load_lower", "ln(n/m) / (ln ln(n/m) + ln k)", r.max_load_lower);
      print_bound_line("matching_bits_lower", "log2(ln(n/(k m)))", r.matching_bits_lower);
      std::printf("  %-22s %-34s = %.6g\n", "col2_threshold", "500 k m", r.col2_threshold);
      std::printf("  %-22s %-34s = %.6g  (t=%llu)\n", "col2_floor", "t^2 / (16 n)",
                  r.col2_floor_at(t), static_cast<unsigned long long>(t));
      return 0;
    }
  } catch (const binsim::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
