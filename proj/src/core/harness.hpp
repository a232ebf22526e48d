// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/cmaes.hpp"
#include "core/sim.hpp"

namespace btlab {

// Behavior tree over a flat parameter vector.
class BtPolicy : public Policy {
 public:
  BtPolicy(BtNodePtr tree, Eigen::VectorXd theta);
  TickStatus step(Blackboard& bb) override;
  const BtNodePtr& tree() const { return tree_; }
  const Eigen::VectorXd& theta() const { return theta_; }

 private:
  BtNodePtr tree_;
  Eigen::VectorXd theta_;
};

// Small feedforward network: 3 inputs, one tanh hidden layer, 3 tanh
// outputs mapped into a fixed workspace box that the attractor chases at a
// practically infinite path velocity. Parameter layout: hidden weights
// (row-major, hidden x 3), hidden biases, output weights (3 x hidden),
// output biases.
struct NnSpec {
  int hidden = 10;
  Eigen::Vector3d obs_center{0.0, 0.0, 0.0};
  double obs_scale = 0.8;
  Eigen::Vector3d box_center{0.0, 0.0, 0.0};
  Eigen::Vector3d box_half{0.0, 0.0, 0.0};
  double path_velocity = 1e6;

  int param_count() const { return 3 * hidden + hidden + hidden * 3 + 3; }
};

// Pure forward pass; zero weights place the target at the box center.
Eigen::Vector3d nn_forward(const NnSpec& spec,
                           const Eigen::VectorXd& theta,
                           const Eigen::Vector3d& observation);

class NnPolicy : public Policy {
 public:
  NnPolicy(NnSpec spec, Eigen::VectorXd theta);
  TickStatus step(Blackboard& bb) override;  // always Running
  Eigen::Vector3d target_for(const Eigen::Vector3d& tip) const;

 private:
  NnSpec spec_;
  Eigen::VectorXd theta_;
};

// Runs fn(0..n-1) on up to `workers` threads. Tasks write into their own
// preallocated slots, so the schedule cannot affect results. The first
// exception thrown by a task is rethrown after all threads join.
void parallel_for_indexed(int n, int workers,
                          const std::function<void(int)>& fn);

// Result of one simulated episode under a candidate.
struct EpisodeOutcome {
  double episode_return = 0.0;
  bool success = false;
  bool fault = false;
};

// Deterministic episode evaluator: must depend only on the arguments.
// candidate_index is the global candidate ordinal (0-based), episode_index
// runs over the per-candidate randomized episodes.
using EpisodeFn = std::function<EpisodeOutcome(
    const Eigen::VectorXd& theta, long long candidate_index,
    int episode_index)>;

struct CandidateEval {
  double mean_return = 0.0;
  int successes = 0;
  int episodes = 0;
  int faults = 0;
};

// Mean return over `episodes` randomized episodes, in fixed order; faulted
// episodes are scored with the floor return.
CandidateEval evaluate_candidate(const EpisodeFn& fn,
                                 const Eigen::VectorXd& theta,
                                 long long candidate_index, int episodes,
                                 double fault_floor);

struct LearnOptions {
  long long budget = 5000;         // candidate evaluations
  int episodes_per_candidate = 5;
  int workers = 1;
  std::uint64_t seed = 0;
  double fault_floor = -1e12;
  CmaConfig cma;
  double sigma0 = 1.0;
  Eigen::VectorXd mean0;           // empty picks the box center
  Eigen::VectorXd scale0;          // empty picks the identity
  std::string out_dir;             // empty disables file output
  std::string run_label;
  // Extra (name, filename) pairs recorded in the manifest's output list.
  std::vector<std::pair<std::string, std::string>> extra_outputs;
};

struct EvalRow {
  long long eval_index = 0;  // 1-based global candidate ordinal
  long long generation = 0;
  int candidate = 0;         // index within the generation
  double mean_return = 0.0;
  int successes = 0;
  int episodes = 0;
  int faults = 0;
};

struct LearnResult {
  Eigen::VectorXd theta_star;
  double best_J = 0.0;
  long long evaluations = 0;
  long long generations = 0;
  int restarts = 0;
  bool theta_is_fallback = false;
  long long first_success_eval = -1;  // -1 when no candidate ever succeeded
  std::vector<OptTraceRow> trace;
  std::vector<EvalRow> evals;
};

// Generation loop: ask, evaluate the population in parallel, tell, until
// the next generation would exceed the budget. With out_dir set, writes
// trace.csv, evals.csv, and manifest.json.
LearnResult learn(const ParamSpace& space, const EpisodeFn& episode,
                  const LearnOptions& opts);

// Deterministic CSV writers (%.17g doubles).
std::string trace_csv(const std::vector<OptTraceRow>& rows,
                      const std::vector<std::string>& dim_names);
std::string evals_csv(const std::vector<EvalRow>& rows);
void write_text_file(const std::string& path, const std::string& text);
std::string format_g17(double v);

}  // namespace btlab
