// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/harness.hpp"

namespace btlab {

enum class TaskKind { ObstacleBt, ObstacleNn, Peg, Combined };

// A fully specified task: world, policy structure, parameter space, reward
// weights, episode length, randomization, and optimizer defaults.
struct Scenario {
  std::string id;
  TaskKind kind = TaskKind::ObstacleBt;
  ArmModel arm;
  WorldModel world;  // nominal; per-episode displacement is added on top
  BtNodePtr tree;    // null for the network policy
  NnSpec nn;
  bool use_nn = false;
  ParamSpace space;
  RewardSpec rewards;
  int episode_steps = 1500;
  double dt = 0.01;

  // Optimizer defaults.
  double sigma0 = 1.0;
  Eigen::VectorXd mean0;
  Eigen::VectorXd scale0;
  long long default_budget = 5000;
  int episodes_per_candidate = 5;

  // Randomized start placement.
  Eigen::Vector3d start_box_lo{0.0, 0.0, 0.0};
  Eigen::Vector3d start_box_hi{0.0, 0.0, 0.0};
  bool start_above_hole = false;   // annulus offsets over the hole instead
  double start_height = 0.0;       // tip height for hole-relative starts
  double start_offset_min = 0.02;
  double start_offset_max = 0.05;
  double hole_shift_range = 0.0;   // per-axis uniform hole displacement
};

const std::vector<std::string>& scenario_names();
Scenario make_scenario(const std::string& id);

// Canonical trees, exposed for composition and tests.
BtNodePtr obstacle_tree();
BtNodePtr peg_tree();
BtNodePtr combined_tree();   // splice of the two over the shared slot label
BtNodePtr no_search_tree();  // straight-descent baseline, no bound slots

// The label both the obstacle stub condition and the insertion subtree
// carry; combining replaces one with the other.
const std::string& peg_slot_label();

// Per-episode randomized quantities.
struct EpisodeSetup {
  Eigen::Vector3d start_tip{0.0, 0.0, 0.0};
  Eigen::Vector2d hole_shift{0.0, 0.0};
};

// Training setup for one (candidate, episode) pair under a master seed.
EpisodeSetup training_setup(const Scenario& s, std::uint64_t master_seed,
                            long long candidate_index, int episode_index);

// Held-out evaluation setup for one trial.
EpisodeSetup eval_setup(const Scenario& s, std::uint64_t eval_seed, int trial,
                        bool use_grid,
                        const std::optional<Eigen::Vector2d>& fixed_shift);

// The 15-pose start grid used by hole-relative evaluation: the five
// training poses (first exactly above the hole) plus ten unseen poses.
std::vector<Eigen::Vector3d> start_grid(const Scenario& s,
                                        std::uint64_t eval_seed);

// Success test on a final state: reach the target cylinder for the
// obstacle tasks, full insertion for the peg and combined tasks.
bool goal_reached(const Scenario& s, const WorldModel& w, const ArmState& st);

// Runs one episode of the scenario under theta with the given setup.
EpisodeLog run_scenario_episode(const Scenario& s, const Eigen::VectorXd& theta,
                                const EpisodeSetup& setup);

// Learning entry point; budget < 0 picks the scenario default.
struct ScenarioLearnOptions {
  long long budget = -1;
  int episodes_per_candidate = -1;
  std::uint64_t seed = 0;
  int workers = 1;
  double sigma0 = -1.0;
  int lambda = 0;
  bool equal_weights = false;
  std::string out_dir;
};
LearnResult learn_scenario(const Scenario& s, const ScenarioLearnOptions& o);

// Held-out evaluation.
struct EvalOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  int workers = 1;
  bool use_grid = false;
  std::optional<Eigen::Vector2d> fixed_shift;
};
struct TrialResult {
  bool success = false;
  bool collided = false;
  double episode_return = 0.0;
  int steps = 0;
};
struct EvaluationReport {
  std::string scenario;
  std::vector<TrialResult> trials;
  int successes = 0;
  int collisions = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};
EvaluationReport evaluate_policy(const Scenario& s,
                                 const Eigen::VectorXd& theta,
                                 const EvalOptions& o);
std::string report_json(const EvaluationReport& r);

// Saved policy: scenario identity, structure, and parameters.
struct PolicyFile {
  std::string scenario_id;
  Eigen::VectorXd theta;
  BtNodePtr tree;  // null for the network policy
  bool use_nn = false;
};

PolicyFile make_policy(const Scenario& s, const Eigen::VectorXd& theta);
PolicyFile no_search_policy();
PolicyFile random_peg_policy(std::uint64_t seed);
void save_policy(const PolicyFile& p, const std::string& path);
// Load validates the stored tree hash and that the structure matches the
// scenario's canonical structure.
PolicyFile load_policy(const std::string& path);
Scenario scenario_for_policy(const PolicyFile& p);

// Concatenates the parameter vectors and splices the insertion subtree into
// the traversal tree's slot; inputs must carry the canonical structures.
PolicyFile combine_policies(const PolicyFile& obstacle, const PolicyFile& peg);

// Human-readable description with full-precision parameters; the theta
// block parses back bit-exactly.
std::string inspect_policy(const PolicyFile& p);
Eigen::VectorXd theta_from_inspect(const std::string& text);

// Re-runs evaluation trial `trial` and writes its trajectory CSV.
void replay_trial(const PolicyFile& p, std::uint64_t seed, int trial,
                  const std::string& csv_path);

}  // namespace btlab
