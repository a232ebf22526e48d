// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
// Command line front end; talks to the library through the C interface only.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "btlab/btlab.h"

namespace {

// Exit codes: 0 success, 1 usage, 2 bad input or configuration, 3 runtime
// failure inside the library.
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(btlab_status s) {
  switch (s) {
    case BTLAB_OK:
      return 0;
    case BTLAB_ERR_ARGUMENT:
    case BTLAB_ERR_CONFIG:
    case BTLAB_ERR_IO:
      return kExitConfig;
    case BTLAB_ERR_FAULT:
    case BTLAB_ERR_INTERNAL:
      return kExitRuntime;
  }
  return kExitRuntime;
}

// Fails the process when a library call reports an error.
void check(btlab_status s) {
  if (s == BTLAB_OK) return;
  std::fprintf(stderr, "error: %s\n", btlab_last_error());
  std::exit(exit_code_for(s));
}

struct PolicyDeleter {
  void operator()(btlab_policy* p) const { btlab_policy_free(p); }
};
struct ReportDeleter {
  void operator()(btlab_report* r) const { btlab_report_free(r); }
};
using PolicyPtr = std::unique_ptr<btlab_policy, PolicyDeleter>;
using ReportPtr = std::unique_ptr<btlab_report, ReportDeleter>;

PolicyPtr load(const std::string& path) {
  btlab_policy* p = nullptr;
  check(btlab_policy_load(path.c_str(), &p));
  return PolicyPtr(p);
}

int workers_from_env() {
  const char* v = std::getenv("BTLAB_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1 || n > 1024) {
    std::fprintf(stderr, "error: BTLAB_WORKERS must be an integer in [1, 1024]\n");
    std::exit(kExitConfig);
  }
  return static_cast<int>(n);
}

void print_report(const btlab_report* rep) {
  int trials = 0, successes = 0, collisions = 0;
  double rate = 0.0, mean = 0.0;
  check(btlab_report_trials(rep, &trials));
  check(btlab_report_successes(rep, &successes));
  check(btlab_report_collisions(rep, &collisions));
  check(btlab_report_success_rate(rep, &rate));
  check(btlab_report_mean_return(rep, &mean));
  std::printf("trials: %d\n", trials);
  std::printf("successes: %d\n", successes);
  std::printf("collisions: %d\n", collisions);
  std::printf("success-rate: %.3f\n", rate);
  std::printf("mean-return: %.17g\n", mean);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"btlab: behavior-tree manipulation lab"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // learn
  auto* learn = app.add_subcommand("learn", "Optimize a policy for a scenario");
  std::string learn_scenario;
  std::int64_t learn_budget = -1;
  int learn_episodes = -1;
  std::uint64_t learn_seed = 0;
  double learn_sigma0 = -1.0;
  int learn_lambda = 0;
  bool learn_equal = false;
  std::string learn_out;
  learn->add_option("scenario", learn_scenario,
                    std::string("one of: ") + btlab_scenario_ids())
      ->required();
  learn->add_option("--budget", learn_budget,
                    "candidate evaluations (default: scenario preset)");
  learn->add_option("--episodes", learn_episodes, "episodes per candidate");
  learn->add_option("--seed", learn_seed, "master seed");
  learn->add_option("--sigma0", learn_sigma0, "initial step size");
  learn->add_option("--lambda", learn_lambda, "population size (0 = auto)");
  learn->add_flag("--equal-weights", learn_equal,
                  "equal recombination weights");
  learn->add_option("--out", learn_out, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a saved policy");
  std::string eval_policy;
  int eval_trials = 20;
  std::uint64_t eval_seed = 1;
  bool eval_grid = false;
  double shift_x = 0.0, shift_y = 0.0;
  bool eval_json = false;
  CLI::Option* opt_sx;
  CLI::Option* opt_sy;
  eval->add_option("policy", eval_policy, "policy file")->required();
  eval->add_option("--trials", eval_trials, "number of trials");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_flag("--grid", eval_grid, "use the fixed 15-pose start grid");
  opt_sx = eval->add_option("--shift-x", shift_x, "fixed hole shift x [m]");
  opt_sy = eval->add_option("--shift-y", shift_y, "fixed hole shift y [m]");
  eval->add_flag("--json", eval_json, "print the full JSON report");

  // combine
  auto* combine =
      app.add_subcommand("combine", "Merge obstacle and peg policies");
  std::string comb_obstacle, comb_peg, comb_out;
  combine->add_option("obstacle", comb_obstacle, "obstacle policy file")
      ->required();
  combine->add_option("peg", comb_peg, "peg policy file")->required();
  combine->add_option("--out", comb_out, "output policy file")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "Write one trial's trajectory");
  std::string rep_policy, rep_out;
  std::uint64_t rep_seed = 1;
  int rep_trial = 0;
  replay->add_option("policy", rep_policy, "policy file")->required();
  replay->add_option("--seed", rep_seed, "evaluation seed");
  replay->add_option("--trial", rep_trial, "trial index");
  replay->add_option("--out", rep_out, "output CSV path")->required();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Describe a saved policy");
  std::string ins_policy;
  inspect->add_option("policy", ins_policy, "policy file")->required();

  // baseline
  auto* baseline =
      app.add_subcommand("baseline", "Write a fixed baseline policy");
  std::string base_kind, base_out;
  std::uint64_t base_seed = 0;
  baseline->add_option("kind", base_kind, "no-search or random")->required();
  baseline->add_option("--seed", base_seed, "seed for the random baseline");
  baseline->add_option("--out", base_out, "output policy file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  const int workers = workers_from_env();

  if (learn->parsed()) {
    btlab_learn_options o;
    check(btlab_learn_options_init(&o));
    o.budget = learn_budget;
    o.episodes_per_candidate = learn_episodes;
    o.seed = learn_seed;
    o.workers = workers;
    o.sigma0 = learn_sigma0;
    o.lambda = learn_lambda;
    o.equal_weights = learn_equal ? 1 : 0;
    o.out_dir = learn_out.c_str();
    btlab_policy* p = nullptr;
    check(btlab_learn(learn_scenario.c_str(), &o, &p));
    PolicyPtr policy(p);
    char* text = nullptr;
    check(btlab_policy_describe(policy.get(), &text));
    std::printf("%s", text);
    btlab_string_free(text);
    std::printf("wrote %s/policy.json\n", learn_out.c_str());
    return 0;
  }

  if (eval->parsed()) {
    PolicyPtr policy = load(eval_policy);
    btlab_eval_options o;
    check(btlab_eval_options_init(&o));
    o.trials = eval_trials;
    o.seed = eval_seed;
    o.workers = workers;
    o.use_grid = eval_grid ? 1 : 0;
    if (opt_sx->count() > 0 || opt_sy->count() > 0) {
      o.has_fixed_shift = 1;
      o.fixed_shift_x = shift_x;
      o.fixed_shift_y = shift_y;
    }
    btlab_report* r = nullptr;
    check(btlab_evaluate(policy.get(), &o, &r));
    ReportPtr rep(r);
    if (eval_json) {
      char* text = nullptr;
      check(btlab_report_json(rep.get(), &text));
      std::printf("%s", text);
      btlab_string_free(text);
    } else {
      print_report(rep.get());
    }
    return 0;
  }

  if (combine->parsed()) {
    PolicyPtr a = load(comb_obstacle);
    PolicyPtr b = load(comb_peg);
    btlab_policy* c = nullptr;
    check(btlab_policy_combine(a.get(), b.get(), &c));
    PolicyPtr merged(c);
    check(btlab_policy_save(merged.get(), comb_out.c_str()));
    std::printf("wrote %s\n", comb_out.c_str());
    return 0;
  }

  if (replay->parsed()) {
    PolicyPtr policy = load(rep_policy);
    check(btlab_replay(policy.get(), rep_seed, rep_trial, rep_out.c_str()));
    std::printf("wrote %s\n", rep_out.c_str());
    return 0;
  }

  if (inspect->parsed()) {
    PolicyPtr policy = load(ins_policy);
    char* text = nullptr;
    check(btlab_policy_describe(policy.get(), &text));
    std::printf("%s", text);
    btlab_string_free(text);
    return 0;
  }

  if (baseline->parsed()) {
    btlab_policy* p = nullptr;
    check(btlab_policy_baseline(base_kind.c_str(), base_seed, &p));
    PolicyPtr policy(p);
    check(btlab_policy_save(policy.get(), base_out.c_str()));
    std::printf("wrote %s\n", base_out.c_str());
    return 0;
  }

  return kExitUsage;
}
