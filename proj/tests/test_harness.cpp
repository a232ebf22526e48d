// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/harness.hpp"
#include "core/rng.hpp"

using namespace btlab;

namespace {

// Synthetic objective: noisy sphere whose noise depends only on the episode
// stream, so learning runs are reproducible by construction.
EpisodeFn noisy_sphere(std::uint64_t master_seed) {
  return [master_seed](const Eigen::VectorXd& theta, long long candidate,
                       int episode) {
    Rng rng(derive_seed(master_seed, 0xAB, static_cast<std::uint64_t>(candidate),
                        static_cast<std::uint64_t>(episode)));
    EpisodeOutcome out;
    out.episode_return = -theta.squaredNorm() + 0.01 * rng.normal();
    out.success = theta.squaredNorm() < 0.01;
    return out;
  };
}

ParamSpace cube(int n, double lo, double hi) {
  ParamSpace sp;
  sp.lower = Eigen::VectorXd::Constant(n, lo);
  sp.upper = Eigen::VectorXd::Constant(n, hi);
  for (int i = 0; i < n; ++i) sp.names.push_back("x" + std::to_string(i));
  return sp;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parallel_for_indexed touches every slot exactly once") {
  std::vector<int> hits(500, 0);
  parallel_for_indexed(500, 7, [&](int i) { hits[static_cast<size_t>(i)]++; });
  for (int h : hits) REQUIRE(h == 1);
  // Degenerate worker counts still work.
  std::vector<int> single(3, 0);
  parallel_for_indexed(3, 1, [&](int i) { single[static_cast<size_t>(i)]++; });
  CHECK(single == std::vector<int>{1, 1, 1});
  parallel_for_indexed(0, 4, [&](int) { FAIL("no tasks expected"); });
}

TEST_CASE("parallel_for_indexed propagates the first task exception") {
  CHECK_THROWS_WITH(parallel_for_indexed(20, 4,
                                         [&](int i) {
                                           if (i == 13)
                                             throw std::runtime_error("boom");
                                         }),
                    "boom");
}

TEST_CASE("candidate evaluation runs episodes in order and averages") {
  std::vector<std::pair<long long, int>> calls;
  std::mutex mu;
  EpisodeFn fn = [&](const Eigen::VectorXd&, long long c, int e) {
    {
      std::lock_guard<std::mutex> lock(mu);
      calls.push_back({c, e});
    }
    EpisodeOutcome out;
    out.episode_return = 10.0 * e;
    out.success = e == 2;
    return out;
  };
  const CandidateEval ev =
      evaluate_candidate(fn, Eigen::VectorXd::Zero(2), 7, 4, -1e12);
  CHECK(ev.episodes == 4);
  CHECK(ev.successes == 1);
  CHECK(ev.mean_return == doctest::Approx((0.0 + 10.0 + 20.0 + 30.0) / 4.0));
  REQUIRE(calls.size() == 4);
  for (int e = 0; e < 4; ++e) {
    CHECK(calls[static_cast<size_t>(e)].first == 7);
    CHECK(calls[static_cast<size_t>(e)].second == e);
  }
}

TEST_CASE("faulted episodes score at the floor") {
  EpisodeFn fn = [](const Eigen::VectorXd&, long long, int e) {
    EpisodeOutcome out;
    out.episode_return = 5.0;
    out.fault = e == 1;
    return out;
  };
  const CandidateEval ev =
      evaluate_candidate(fn, Eigen::VectorXd::Zero(1), 0, 2, -100.0);
  CHECK(ev.faults == 1);
  CHECK(ev.mean_return == doctest::Approx((5.0 - 100.0) / 2.0));
}

TEST_CASE("network parameter count and zero-weight centering") {
  NnSpec spec;
  spec.hidden = 10;
  spec.obs_center = {0.55, 0.0, 0.26};
  spec.box_center = {0.35, 0.0, 0.30};
  spec.box_half = {0.30, 0.15, 0.25};
  CHECK(spec.param_count() == 73);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(73);
  const Eigen::Vector3d out = nn_forward(spec, zero, {0.1, 0.2, 0.3});
  // tanh(0) = 0 maps to the box center regardless of the observation.
  CHECK(out == spec.box_center);
}

TEST_CASE("network output stays inside the workspace box") {
  NnSpec spec;
  spec.hidden = 10;
  spec.box_center = {0.35, 0.0, 0.30};
  spec.box_half = {0.30, 0.15, 0.25};
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd theta(spec.param_count());
    for (int i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-5.0, 5.0);
    const Eigen::Vector3d obs(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                              rng.uniform(-1.0, 1.0));
    const Eigen::Vector3d out = nn_forward(spec, theta, obs);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(out[i] >= spec.box_center[i] - spec.box_half[i]);
      REQUIRE(out[i] <= spec.box_center[i] + spec.box_half[i]);
    }
  }
}

TEST_CASE("network policy emits a chase command every tick") {
  NnSpec spec;
  spec.hidden = 10;
  spec.obs_center = {0.55, 0.0, 0.26};
  spec.box_center = {0.35, 0.0, 0.30};
  spec.box_half = {0.30, 0.15, 0.25};
  NnPolicy policy(spec, Eigen::VectorXd::Zero(73));
  Blackboard bb;
  bb.peg_position = {0.2, 0.1, 0.3};
  CHECK(policy.step(bb) == TickStatus::Running);
  REQUIRE(bb.skill_command.has_value());
  CHECK(bb.skill_command->goal == spec.box_center);
  CHECK(bb.skill_command->path_velocity == spec.path_velocity);
  CHECK(bb.skill_command->spiral_velocity == 0.0);
}

TEST_CASE("policy constructors validate the parameter size") {
  NnSpec spec;
  CHECK_THROWS_AS(NnPolicy(spec, Eigen::VectorXd::Zero(10)), Error);
}

TEST_CASE("learning is invariant to the worker count") {
  const ParamSpace sp = cube(3, -2.0, 2.0);
  LearnOptions base;
  base.budget = 240;
  base.episodes_per_candidate = 4;
  base.seed = 11;
  base.sigma0 = 0.6;

  LearnOptions o1 = base, o3 = base;
  o1.workers = 1;
  o3.workers = 3;
  const LearnResult r1 = learn(sp, noisy_sphere(5), o1);
  const LearnResult r3 = learn(sp, noisy_sphere(5), o3);

  CHECK(r1.theta_star == r3.theta_star);
  CHECK(r1.evaluations == r3.evaluations);
  CHECK(trace_csv(r1.trace, sp.names) == trace_csv(r3.trace, sp.names));
  CHECK(evals_csv(r1.evals) == evals_csv(r3.evals));
}

TEST_CASE("learning respects the evaluation budget") {
  const ParamSpace sp = cube(2, -1.0, 1.0);
  LearnOptions o;
  o.budget = 50;
  o.episodes_per_candidate = 2;
  o.seed = 3;
  const LearnResult r = learn(sp, noisy_sphere(9), o);
  CHECK(r.evaluations <= 50);
  CHECK(r.generations > 0);
  // The next generation would not have fit.
  CHECK(r.evaluations + default_lambda(2) > 50);
}

TEST_CASE("first success records the global candidate ordinal") {
  // Succeed for every candidate from the third one onward.
  EpisodeFn fn = [](const Eigen::VectorXd&, long long c, int) {
    EpisodeOutcome out;
    out.episode_return = static_cast<double>(c);
    out.success = c >= 2;
    return out;
  };
  const ParamSpace sp = cube(2, -1.0, 1.0);
  LearnOptions o;
  o.budget = 30;
  o.episodes_per_candidate = 1;
  const LearnResult r = learn(sp, fn, o);
  CHECK(r.first_success_eval == 3);  // 1-based ordinal of candidate index 2

  EpisodeFn never = [](const Eigen::VectorXd&, long long, int) {
    return EpisodeOutcome{};
  };
  const LearnResult r2 = learn(sp, never, o);
  CHECK(r2.first_success_eval == -1);
}

TEST_CASE("learning writes its output files") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "btlab_harness_out_test";
  fs::remove_all(dir);

  const ParamSpace sp = cube(2, -1.0, 1.0);
  LearnOptions o;
  o.budget = 36;
  o.episodes_per_candidate = 2;
  o.seed = 21;
  o.out_dir = dir.string();
  o.run_label = "unit";
  const LearnResult r = learn(sp, noisy_sphere(2), o);

  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "evals.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(slurp(dir / "trace.csv") == trace_csv(r.trace, sp.names));
  CHECK(slurp(dir / "evals.csv") == evals_csv(r.evals));

  const nlohmann::json m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["seed"] == 21);
  CHECK(m["budget"] == 36);
  CHECK(m["evaluations"] == r.evaluations);
  CHECK(m["first_success_eval"] == r.first_success_eval);
  CHECK(m["outputs"]["trace"] == "trace.csv");
  fs::remove_all(dir);
}

TEST_CASE("csv columns align with their headers") {
  OptTraceRow row;
  row.generation = 3;
  row.evaluations = 27;
  row.run_index = 1;
  row.lambda = 9;
  row.sigma = 0.25;
  row.best_J_gen = -1.5;
  row.mean_J_gen = -2.0;
  row.best_J_so_far = -1.25;
  row.mean = Eigen::Vector2d(0.125, -0.5);
  const std::string csv = trace_csv({row}, {"a", "b"});
  CHECK(csv ==
        "generation,evaluations,run,lambda,sigma,best_J_gen,mean_J_gen,"
        "best_J,m_a,m_b\n3,27,1,9,0.25,-1.5,-2,-1.25,0.125,-0.5\n");

  EvalRow er;
  er.eval_index = 4;
  er.generation = 1;
  er.candidate = 3;
  er.mean_return = -0.5;
  er.successes = 2;
  er.episodes = 5;
  er.faults = 0;
  CHECK(evals_csv({er}) ==
        "eval,generation,candidate,mean_return,successes,episodes,faults\n"
        "4,1,3,-0.5,2,5,0\n");
}

TEST_CASE("g17 formatting round trips doubles bit for bit") {
  for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, -0.0, 3.141592653589793,
                   -1234.5678901234567}) {
    const std::string s = format_g17(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
}
