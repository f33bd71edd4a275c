// Command-line front end: run experiments, evaluate saved tables, write
// demonstrations and print oracle policies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ctfrl/ctfrl.hpp"

namespace {

using namespace ctfrl;

int cmd_run(const std::string& config_path, const std::string& out_dir, std::size_t workers) {
  const auto cfg = load_config(config_path);
  RunOptions opts;
  opts.out_dir = out_dir;
  opts.workers = workers;
  opts.keep_tables = false;
  const auto logs = run_experiment(cfg, opts);
  const auto summary = summarize(logs);
  const std::size_t n = cfg.episodes;
  const std::size_t window = std::min<std::size_t>(100, n);
  double steps = 0.0;
  double ret = 0.0;
  for (std::size_t i = n - window; i < n; ++i) {
    steps += summary.steps.mean[i];
    ret += summary.ret.mean[i];
  }
  std::printf("%s: %zu runs x %zu episodes -> %s\n", std::string(env_kind(cfg.env)).c_str(),
              cfg.repetitions, cfg.episodes, out_dir.c_str());
  std::printf("last %zu training episodes: mean steps %.3f, mean return %.3f\n", window,
              steps / window, ret / window);
  if (!summary.diag_episodes.empty()) {
    std::printf("diag_ratio at episode %zu: %.4f (entries shifted by the global minimum when "
                "negative)\n",
                summary.diag_episodes.back(), summary.diag_ratio.mean.back());
  }
  if (cfg.eval_episodes > 0) {
    double eval_steps = 0.0;
    double eval_ret = 0.0;
    for (std::size_t i = n; i < summary.episodes; ++i) {
      eval_steps += summary.steps.mean[i];
      eval_ret += summary.ret.mean[i];
    }
    std::printf("greedy evaluation (%zu episodes): mean steps %.3f, mean return %.3f\n",
                cfg.eval_episodes, eval_steps / cfg.eval_episodes, eval_ret / cfg.eval_episodes);
  }
  return 0;
}

int cmd_eval(const std::string& qtable_path, const std::string& config_path,
             std::size_t episodes, const std::string& csv_out) {
  const auto cfg = load_config(config_path);
  AnyEnv env = make_env(cfg.env);
  QAgent agent(action_count(env), cfg.agent);
  agent.table() = load_table(qtable_path, action_count(env), cfg.agent.init_scale);
  std::vector<EpisodeRecord> records;
  std::size_t captured = 0;
  double steps = 0.0;
  double ret = 0.0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    agent.reseed(make_rng(cfg.master_seed, 0, ep, Stream::agent));
    auto r = run_episode(env, agent, make_rng(cfg.master_seed, 0, ep), false, true, ep).record;
    captured += r.captured;
    steps += static_cast<double>(r.steps);
    ret += r.ret;
    records.push_back(r);
  }
  if (!csv_out.empty()) write_run_csv(records, csv_out);
  const double n = static_cast<double>(std::max<std::size_t>(episodes, 1));
  std::printf("episodes %zu, captured %zu, mean steps %.3f, mean return %.3f\n", episodes,
              captured, steps / n, ret / n);
  return 0;
}

int cmd_demo(const std::string& config_path, std::size_t count, const std::string& out_path,
             double noise) {
  const auto cfg = load_config(config_path);
  AnyEnv env = make_env(cfg.env);
  const auto demos = generate_demonstrations(env, count, cfg.master_seed, 0, noise);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot open " + out_path + " for writing");
  write_demonstrations(demos, out);
  std::size_t transitions = 0;
  for (const auto& d : demos) transitions += d.size();
  std::printf("wrote %zu demonstrations (%zu transitions) to %s\n", count, transitions,
              out_path.c_str());
  return 0;
}

int cmd_oracle(const std::string& config_path, std::optional<double> gamma_override,
               double tol) {
  const auto cfg = load_config(config_path);
  const auto* ps = std::get_if<PortScanConfig>(&cfg.env);
  if (!ps) throw Error("oracle supports port-scan configs only");
  const double gamma = gamma_override.value_or(cfg.agent.gamma);
  const auto mdp = build_explicit_mdp(*ps);
  const auto vi = value_iteration(mdp, gamma, tol);
  std::printf("port-scan N=%zu p=%g gamma=%g (%zu iterations)\n", ps->n_ports, ps->detect_prob,
              gamma, vi.iterations);
  std::printf("%-14s %-14s %s\n", "state", "action", "value");
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    const std::string state = s == 0 ? "ignorance" : "reported:" + std::to_string(s - 1);
    const std::size_t a = vi.policy[s].index;
    const std::string action = a == 0 ? "scan" : "exploit:" + std::to_string(a - 1);
    std::printf("%-14s %-14s %.6f\n", state.c_str(), action.c_str(), vi.values[s]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-learning laboratory for capture-the-flag simulations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t workers = 1;
  auto* run = app.add_subcommand("run", "train and evaluate as described by a config");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory")->default_val("out");
  run->add_option("--workers", workers, "concurrent runs")->default_val(1);

  std::string qtable_path;
  std::size_t episodes = 100;
  std::string csv_out;
  auto* eval = app.add_subcommand("eval", "greedy episodes with a saved table");
  eval->add_option("--qtable", qtable_path, "saved table")->required();
  eval->add_option("--config", config_path, "experiment config (JSON)")->required();
  eval->add_option("--episodes", episodes, "episodes to play")->required();
  eval->add_option("--csv", csv_out, "optional per-episode CSV output");

  std::size_t count = 0;
  std::string demo_out;
  double noise = 0.0;
  auto* demo = app.add_subcommand("demo", "write expert demonstrations as NDJSON");
  demo->add_option("--config", config_path, "experiment config (JSON)")->required();
  demo->add_option("--count", count, "number of demonstrations")->required();
  demo->add_option("--out", demo_out, "output file")->required();
  demo->add_option("--noise", noise, "probability of a random expert action")->default_val(0.0);

  std::optional<double> gamma;
  double tol = 1e-10;
  auto* oracle = app.add_subcommand("oracle", "value-iteration policy for a port-scan config");
  oracle->add_option("--config", config_path, "experiment config (JSON)")->required();
  oracle->add_option("--gamma", gamma, "discount (defaults to agent.gamma; 1 = undiscounted)");
  oracle->add_option("--tol", tol, "convergence tolerance")->default_val(1e-10);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir, workers);
    if (*eval) return cmd_eval(qtable_path, config_path, episodes, csv_out);
    if (*demo) return cmd_demo(config_path, count, demo_out, noise);
    if (*oracle) return cmd_oracle(config_path, gamma, tol);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
