// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/scenario.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace btlab {

namespace {

// Scene geometry shared by the tasks.
constexpr double kHoleX = 0.55;
constexpr double kHoleY = 0.0;
constexpr double kSurfaceZ = 0.12;
constexpr double kHoleRadius = 0.005;
constexpr double kHoleDepth = 0.03;
constexpr double kPegRadius = 0.0025;
constexpr double kInsertedZ = kSurfaceZ - 0.010;
constexpr double kNearSurfaceZ = kSurfaceZ + 0.005;
constexpr double kApproachZ = kSurfaceZ + 0.002;
constexpr double kApproachX = kHoleX;
constexpr double kApproachHeight = 0.26;  // hover point over the hole
constexpr double kCylinderRadius = 0.03;
constexpr double kCylinderTop = 0.30;
constexpr double kTravelSpeed = 0.25;
constexpr double kSearchDescendSpeed = 0.05;
constexpr double kSpiralPitch = 0.0012;
constexpr double kHoleShiftRange = 0.010;

// Seed stream tags.
constexpr std::uint64_t kTagTrain = 0x545241494eULL;
constexpr std::uint64_t kTagEval = 0x4556414cULL;
constexpr std::uint64_t kTagGrid = 0x47524944ULL;
constexpr std::uint64_t kTagPolicy = 0x504f4cULL;

// Fixed training start offsets over the hole (xy, meters); the first is
// exactly above, the rest lie 2 to 5 cm out.
const Eigen::Vector2d kTrainingOffsets[5] = {
    {0.000, 0.000},  {0.030, 0.020},   {-0.025, 0.035},
    {0.040, -0.030}, {-0.020, -0.045},
};

WorldModel obstacle_world() {
  WorldModel w;
  w.obstacle_center = {0.33, 0.0, 0.16};
  w.obstacle_half = {0.05, 0.10, 0.16};
  w.surface_height = 0.0;  // bare floor; the hole plays no role here
  w.hole_center_nominal = {kHoleX, kHoleY};
  w.hole_radius = kHoleRadius;
  w.hole_depth = kHoleDepth;
  w.peg_radius = kPegRadius;
  return w;
}

WorldModel peg_world() {
  WorldModel w;
  // The avoidance object is the table carrying the workpiece; its top sits
  // 12 cm below the work surface, so searching on the surface is cheap but
  // driving deep stays penalized.
  w.obstacle_center = {kHoleX, 0.0, -0.04};
  w.obstacle_half = {0.60, 0.60, 0.04};
  w.surface_height = kSurfaceZ;
  w.hole_center_nominal = {kHoleX, kHoleY};
  w.hole_radius = kHoleRadius;
  w.hole_depth = kHoleDepth;
  w.peg_radius = kPegRadius;
  return w;
}

WorldModel combined_world() {
  WorldModel w = peg_world();
  w.obstacle_center = {0.33, 0.0, 0.16};
  w.obstacle_half = {0.05, 0.10, 0.16};
  return w;
}

BtNodePtr cylinder_condition(const std::string& label) {
  return make_condition(
      label, "tip-in-cylinder",
      {fixed_param("x", SlotRole::Threshold, kApproachX),
       fixed_param("y", SlotRole::Threshold, kHoleY),
       fixed_param("radius", SlotRole::Threshold, kCylinderRadius),
       fixed_param("z-top", SlotRole::Threshold, kCylinderTop)});
}

BtNodePtr peg_subtree(int base) {
  return make_selector(
      "peg-task",
      {make_condition("peg-inserted", "tip-below-z",
                      {fixed_param("z", SlotRole::Threshold, kInsertedZ)}),
       make_sequence(
           "search-branch",
           {make_selector(
                "descend-guard",
                {make_condition(
                     "near-surface", "tip-below-z",
                     {fixed_param("z", SlotRole::Threshold, kNearSurfaceZ)}),
                 make_action(
                     "approach-hole", "move-to",
                     {fixed_param("x", SlotRole::GoalCoordinate, kApproachX),
                      fixed_param("y", SlotRole::GoalCoordinate, kHoleY),
                      fixed_param("z", SlotRole::GoalCoordinate, kApproachZ),
                      fixed_param("speed", SlotRole::SkillParam,
                                  kTravelSpeed)})}),
            make_action(
                "spiral-search", "move-to",
                {fixed_param("x", SlotRole::GoalCoordinate, kApproachX),
                 fixed_param("y", SlotRole::GoalCoordinate, kHoleY),
                 bound_param("z", SlotRole::GoalCoordinate, base + 0),
                 fixed_param("speed", SlotRole::SkillParam,
                             kSearchDescendSpeed),
                 bound_param("spiral-velocity", SlotRole::SkillParam,
                             base + 1),
                 fixed_param("spiral-pitch", SlotRole::SkillParam,
                             kSpiralPitch)})})});
}

}  // namespace

const std::string& peg_slot_label() {
  static const std::string label = "peg-task";
  return label;
}

BtNodePtr obstacle_tree() {
  static const BtNodePtr tree = make_selector(
      "task-root",
      {make_sequence("insert-branch", {cylinder_condition("near-hole"),
                                       cylinder_condition("peg-task")}),
       make_sequence(
           "motion3-branch",
           {make_condition("beyond-obstacle", "tip-beyond-x",
                           {bound_param("x", SlotRole::Threshold, 1)}),
            make_action(
                "motion-3", "move-to",
                {fixed_param("x", SlotRole::GoalCoordinate, kApproachX),
                 fixed_param("y", SlotRole::GoalCoordinate, kHoleY),
                 fixed_param("z", SlotRole::GoalCoordinate, kApproachHeight),
                 fixed_param("speed", SlotRole::SkillParam, kTravelSpeed)})}),
       make_sequence(
           "motion2-branch",
           {make_condition("above-obstacle", "tip-above-z",
                           {bound_param("z", SlotRole::Threshold, 0)}),
            make_action(
                "motion-2", "move-to",
                {bound_param("x", SlotRole::GoalCoordinate, 4),
                 fixed_param("y", SlotRole::GoalCoordinate, 0.0),
                 bound_param("z", SlotRole::GoalCoordinate, 5),
                 fixed_param("speed", SlotRole::SkillParam, kTravelSpeed)})}),
       make_action("motion-1", "move-to",
                   {bound_param("x", SlotRole::GoalCoordinate, 2),
                    fixed_param("y", SlotRole::GoalCoordinate, 0.0),
                    bound_param("z", SlotRole::GoalCoordinate, 3),
                    fixed_param("speed", SlotRole::SkillParam,
                                kTravelSpeed)})});
  return tree;
}

BtNodePtr peg_tree() {
  static const BtNodePtr tree = peg_subtree(0);
  return tree;
}

BtNodePtr combined_tree() {
  static const BtNodePtr tree =
      splice(obstacle_tree(), peg_slot_label(), peg_subtree(6));
  return tree;
}

BtNodePtr no_search_tree() {
  static const BtNodePtr tree = make_selector(
      "peg-task",
      {make_condition("peg-inserted", "tip-below-z",
                      {fixed_param("z", SlotRole::Threshold, kInsertedZ)}),
       make_action("press-down", "descend",
                   {fixed_param("z", SlotRole::GoalCoordinate, 0.105),
                    fixed_param("speed", SlotRole::SkillParam, 0.10)})});
  return tree;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"obstacle", "obstacle-nn",
                                                 "peg", "combined"};
  return names;
}

Scenario make_scenario(const std::string& id) {
  Scenario s;
  s.id = id;
  s.arm = ArmModel{};
  s.dt = 0.01;
  s.episodes_per_candidate = 5;

  if (id == "obstacle" || id == "obstacle-nn") {
    s.kind = id == "obstacle" ? TaskKind::ObstacleBt : TaskKind::ObstacleNn;
    s.world = obstacle_world();
    s.episode_steps = 1500;
    s.rewards.goal_point = {kApproachX, kHoleY, kApproachHeight};
    s.rewards.w_goal = 1.0;
    s.rewards.w_avoid = 1.0;
    s.rewards.w_hole = 0.0;
    s.rewards.finish_bonus = 3000.0;
    s.start_box_lo = {0.12, -0.03, 0.14};
    s.start_box_hi = {0.20, 0.03, 0.22};
    if (s.kind == TaskKind::ObstacleBt) {
      s.tree = obstacle_tree();
      s.space.names = {"p1", "p2", "g1.x", "g1.z", "g2.x", "g2.z"};
      s.space.lower = (Eigen::VectorXd(6) << 0.15, 0.20, 0.10, 0.15, 0.20,
                       0.15).finished();
      s.space.upper = (Eigen::VectorXd(6) << 0.55, 0.55, 0.30, 0.55, 0.58,
                       0.55).finished();
      s.mean0 = 0.5 * (s.space.lower + s.space.upper);
      s.scale0 = 0.3 * (s.space.upper - s.space.lower);
      s.sigma0 = 1.0;
      s.default_budget = 5000;
    } else {
      s.use_nn = true;
      s.nn.hidden = 10;
      s.nn.obs_center = {kApproachX, kHoleY, kApproachHeight};
      s.nn.obs_scale = 0.8;
      s.nn.box_center = {0.35, 0.0, 0.30};
      s.nn.box_half = {0.30, 0.15, 0.25};
      s.nn.path_velocity = 1e6;
      const int n = s.nn.param_count();
      s.space.names.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i)
        s.space.names[static_cast<size_t>(i)] = "w" + std::to_string(i);
      s.space.lower = Eigen::VectorXd::Constant(n, -5.0);
      s.space.upper = Eigen::VectorXd::Constant(n, 5.0);
      s.mean0 = Eigen::VectorXd::Zero(n);
      s.scale0 = Eigen::VectorXd();  // identity coordinate scales
      s.sigma0 = 0.5;
      s.default_budget = 5000;
    }
    return s;
  }

  if (id == "peg") {
    s.kind = TaskKind::Peg;
    s.world = peg_world();
    s.tree = peg_tree();
    s.episode_steps = 2000;
    s.rewards.goal_point = {kHoleX, kHoleY, kSurfaceZ};
    s.rewards.w_goal = 1.0;
    s.rewards.w_avoid = 1.0;
    s.rewards.w_hole = 1.0;
    s.rewards.finish_bonus = 200000.0;
    s.space.names = {"g3.z", "v_s"};
    s.space.lower = (Eigen::VectorXd(2) << 0.085, 0.001).finished();
    s.space.upper = (Eigen::VectorXd(2) << 0.118, 0.020).finished();
    s.mean0 = 0.5 * (s.space.lower + s.space.upper);
    s.scale0 = 0.3 * (s.space.upper - s.space.lower);
    s.sigma0 = 1.0;
    s.default_budget = 1500;
    s.start_above_hole = true;
    s.start_height = kSurfaceZ + 0.40;
    s.hole_shift_range = kHoleShiftRange;
    return s;
  }

  if (id == "combined") {
    s.kind = TaskKind::Combined;
    s.world = combined_world();
    s.tree = combined_tree();
    s.episode_steps = 3000;
    s.rewards.goal_point = {kHoleX, kHoleY, kSurfaceZ};
    s.rewards.w_goal = 1.0;
    s.rewards.w_avoid = 1.0;
    s.rewards.w_hole = 1.0;
    s.rewards.finish_bonus = 400000.0;
    const Scenario so = make_scenario("obstacle");
    const Scenario sp = make_scenario("peg");
    s.space.names = so.space.names;
    s.space.names.insert(s.space.names.end(), sp.space.names.begin(),
                         sp.space.names.end());
    s.space.lower.resize(8);
    s.space.upper.resize(8);
    s.space.lower << so.space.lower, sp.space.lower;
    s.space.upper << so.space.upper, sp.space.upper;
    s.mean0 = 0.5 * (s.space.lower + s.space.upper);
    s.scale0 = 0.3 * (s.space.upper - s.space.lower);
    s.sigma0 = 1.0;
    s.default_budget = 8000;
    s.start_box_lo = {0.12, -0.03, 0.14};
    s.start_box_hi = {0.20, 0.03, 0.22};
    s.hole_shift_range = kHoleShiftRange;
    return s;
  }

  throw_error(ErrorCode::Config, "unknown scenario '" + id + "'");
}

namespace {

Eigen::Vector3d draw_box_start(const Scenario& s, Rng& rng) {
  Eigen::Vector3d p;
  for (int i = 0; i < 3; ++i)
    p[i] = rng.uniform(s.start_box_lo[i], s.start_box_hi[i]);
  return p;
}

Eigen::Vector3d offset_start(const Scenario& s, const Eigen::Vector2d& off) {
  return {kHoleX + off.x(), kHoleY + off.y(), s.start_height};
}

Eigen::Vector3d draw_annulus_start(const Scenario& s, Rng& rng) {
  const double r = rng.uniform(s.start_offset_min, s.start_offset_max);
  const double phi = rng.uniform(0.0, 2.0 * 3.141592653589793);
  return offset_start(s, {r * std::cos(phi), r * std::sin(phi)});
}

Eigen::Vector2d draw_shift(const Scenario& s, Rng& rng) {
  if (s.hole_shift_range <= 0.0) return {0.0, 0.0};
  const double dx = rng.uniform(-s.hole_shift_range, s.hole_shift_range);
  const double dy = rng.uniform(-s.hole_shift_range, s.hole_shift_range);
  return {dx, dy};
}

}  // namespace

EpisodeSetup training_setup(const Scenario& s, std::uint64_t master_seed,
                            long long candidate_index, int episode_index) {
  Rng rng(derive_seed(master_seed, kTagTrain,
                      static_cast<std::uint64_t>(candidate_index),
                      static_cast<std::uint64_t>(episode_index)));
  EpisodeSetup setup;
  if (s.start_above_hole)
    setup.start_tip = offset_start(s, kTrainingOffsets[episode_index % 5]);
  else
    setup.start_tip = draw_box_start(s, rng);
  setup.hole_shift = draw_shift(s, rng);
  return setup;
}

std::vector<Eigen::Vector3d> start_grid(const Scenario& s,
                                        std::uint64_t eval_seed) {
  std::vector<Eigen::Vector3d> grid;
  grid.reserve(15);
  for (const Eigen::Vector2d& off : kTrainingOffsets)
    grid.push_back(offset_start(s, off));
  Rng rng(derive_seed(eval_seed, kTagGrid));
  for (int i = 0; i < 10; ++i) grid.push_back(draw_annulus_start(s, rng));
  return grid;
}

EpisodeSetup eval_setup(const Scenario& s, std::uint64_t eval_seed, int trial,
                        bool use_grid,
                        const std::optional<Eigen::Vector2d>& fixed_shift) {
  Rng rng(derive_seed(eval_seed, kTagEval, static_cast<std::uint64_t>(trial)));
  EpisodeSetup setup;
  if (s.start_above_hole) {
    if (use_grid) {
      const std::vector<Eigen::Vector3d> grid = start_grid(s, eval_seed);
      setup.start_tip = grid[static_cast<size_t>(trial) % grid.size()];
    } else {
      setup.start_tip = draw_annulus_start(s, rng);
    }
  } else {
    setup.start_tip = draw_box_start(s, rng);
  }
  setup.hole_shift = fixed_shift ? *fixed_shift : draw_shift(s, rng);
  return setup;
}

bool goal_reached(const Scenario& s, const WorldModel& w, const ArmState& st) {
  switch (s.kind) {
    case TaskKind::ObstacleBt:
    case TaskKind::ObstacleNn: {
      const Eigen::Vector2d c(kApproachX, kHoleY);
      return (st.peg_tip.head<2>() - c).norm() < kCylinderRadius &&
             st.peg_tip.z() < kCylinderTop;
    }
    case TaskKind::Peg:
    case TaskKind::Combined:
      return st.captured && st.peg_tip.z() < w.surface_height - 0.010;
  }
  return false;
}

EpisodeLog run_scenario_episode(const Scenario& s, const Eigen::VectorXd& theta,
                                const EpisodeSetup& setup) {
  WorldModel world = s.world;
  world.hole_displacement = setup.hole_shift;

  Eigen::Vector3d q0;
  if (!inverse_kinematics(s.arm, setup.start_tip, q0))
    throw_error(ErrorCode::Fault, "start pose out of reach");

  EpisodeConfig cfg;
  cfg.max_steps = s.episode_steps;
  cfg.dt = s.dt;
  cfg.initial_q = q0;
  cfg.rewards = s.rewards;
  const Scenario* sp = &s;
  cfg.goal_reached = [sp, world](const ArmState& st) {
    return goal_reached(*sp, world, st);
  };

  if (s.use_nn) {
    NnPolicy policy(s.nn, theta);
    return run_episode(s.arm, world, policy, cfg);
  }
  BtPolicy policy(s.tree, theta);
  return run_episode(s.arm, world, policy, cfg);
}

LearnResult learn_scenario(const Scenario& s, const ScenarioLearnOptions& o) {
  LearnOptions opts;
  opts.budget = o.budget >= 0 ? o.budget : s.default_budget;
  opts.episodes_per_candidate = o.episodes_per_candidate > 0
                                    ? o.episodes_per_candidate
                                    : s.episodes_per_candidate;
  opts.workers = o.workers;
  opts.seed = o.seed;
  opts.sigma0 = o.sigma0 > 0.0 ? o.sigma0 : s.sigma0;
  opts.mean0 = s.mean0;
  opts.scale0 = s.scale0;
  opts.cma.lambda = o.lambda;
  opts.cma.equal_weights = o.equal_weights;
  opts.out_dir = o.out_dir;
  opts.run_label = s.id;
  if (!o.out_dir.empty()) opts.extra_outputs.push_back({"policy", "policy.json"});

  const std::uint64_t master = o.seed;
  const Scenario* sp = &s;
  EpisodeFn fn = [sp, master](const Eigen::VectorXd& theta,
                              long long candidate_index, int episode_index) {
    const EpisodeSetup setup =
        training_setup(*sp, master, candidate_index, episode_index);
    const EpisodeLog log = run_scenario_episode(*sp, theta, setup);
    EpisodeOutcome out;
    out.episode_return = episode_return(log, sp->rewards);
    out.success = log.success && !log.penetrated;
    out.fault = log.faulted;
    return out;
  };

  LearnResult res = learn(s.space, fn, opts);
  if (!o.out_dir.empty()) {
    const PolicyFile p = make_policy(s, res.theta_star);
    save_policy(p, o.out_dir + "/policy.json");
  }
  return res;
}

EvaluationReport evaluate_policy(const Scenario& s,
                                 const Eigen::VectorXd& theta,
                                 const EvalOptions& o) {
  if (o.trials <= 0) throw_error(ErrorCode::Config, "trials must be positive");
  EvaluationReport rep;
  rep.scenario = s.id;
  rep.trials.resize(static_cast<size_t>(o.trials));
  const Scenario* sp = &s;
  parallel_for_indexed(o.trials, o.workers, [&, sp](int i) {
    const EpisodeSetup setup =
        eval_setup(*sp, o.seed, i, o.use_grid, o.fixed_shift);
    const EpisodeLog log = run_scenario_episode(*sp, theta, setup);
    TrialResult t;
    t.success = log.success && !log.penetrated;
    t.collided = log.penetrated;
    t.episode_return = episode_return(log, sp->rewards);
    t.steps = static_cast<int>(log.steps.size());
    rep.trials[static_cast<size_t>(i)] = t;
  });
  double sum = 0.0;
  for (const TrialResult& t : rep.trials) {
    if (t.success) ++rep.successes;
    if (t.collided) ++rep.collisions;
    sum += t.episode_return;
  }
  rep.success_rate = static_cast<double>(rep.successes) / o.trials;
  rep.mean_return = sum / o.trials;
  return rep;
}

std::string report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["trials"] = r.trials.size();
  j["successes"] = r.successes;
  j["collisions"] = r.collisions;
  j["success_rate"] = r.success_rate;
  j["mean_return"] = r.mean_return;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const TrialResult& t : r.trials) {
    nlohmann::ordered_json tj;
    tj["success"] = t.success;
    tj["collided"] = t.collided;
    tj["return"] = t.episode_return;
    tj["steps"] = t.steps;
    arr.push_back(std::move(tj));
  }
  j["per_trial"] = std::move(arr);
  return j.dump(2) + "\n";
}

namespace {

std::string expected_hash_for(const std::string& scenario_id) {
  if (scenario_id == "obstacle") return tree_hash(*obstacle_tree());
  if (scenario_id == "peg" || scenario_id == "peg-random")
    return tree_hash(*peg_tree());
  if (scenario_id == "combined") return tree_hash(*combined_tree());
  if (scenario_id == "peg-no-search") return tree_hash(*no_search_tree());
  if (scenario_id == "obstacle-nn") return "";
  throw_error(ErrorCode::Config,
              "unknown policy scenario '" + scenario_id + "'");
}

int expected_theta_size(const std::string& scenario_id) {
  if (scenario_id == "obstacle") return 6;
  if (scenario_id == "peg" || scenario_id == "peg-random") return 2;
  if (scenario_id == "combined") return 8;
  if (scenario_id == "peg-no-search") return 0;
  if (scenario_id == "obstacle-nn") return NnSpec{}.param_count();
  throw_error(ErrorCode::Config,
              "unknown policy scenario '" + scenario_id + "'");
}

}  // namespace

PolicyFile make_policy(const Scenario& s, const Eigen::VectorXd& theta) {
  if (theta.size() != s.space.dims())
    throw_error(ErrorCode::Binding,
                "scenario '" + s.id + "' expects " +
                    std::to_string(s.space.dims()) + " parameters, got " +
                    std::to_string(theta.size()));
  PolicyFile p;
  p.scenario_id = s.id;
  p.theta = theta;
  p.tree = s.tree;
  p.use_nn = s.use_nn;
  return p;
}

PolicyFile no_search_policy() {
  PolicyFile p;
  p.scenario_id = "peg-no-search";
  p.theta = Eigen::VectorXd(0);
  p.tree = no_search_tree();
  return p;
}

PolicyFile random_peg_policy(std::uint64_t seed) {
  const Scenario s = make_scenario("peg");
  Rng rng(derive_seed(seed, kTagPolicy));
  Eigen::VectorXd theta(s.space.dims());
  for (int i = 0; i < theta.size(); ++i)
    theta[i] = rng.uniform(s.space.lower[i], s.space.upper[i]);
  PolicyFile p;
  p.scenario_id = "peg-random";
  p.theta = theta;
  p.tree = peg_tree();
  return p;
}

Scenario scenario_for_policy(const PolicyFile& p) {
  if (p.scenario_id == "obstacle" || p.scenario_id == "obstacle-nn" ||
      p.scenario_id == "peg" || p.scenario_id == "combined")
    return make_scenario(p.scenario_id);
  if (p.scenario_id == "peg-no-search") {
    Scenario s = make_scenario("peg");
    s.id = "peg-no-search";
    s.tree = no_search_tree();
    return s;
  }
  if (p.scenario_id == "peg-random") {
    Scenario s = make_scenario("peg");
    s.id = "peg-random";
    return s;
  }
  throw_error(ErrorCode::Config,
              "unknown policy scenario '" + p.scenario_id + "'");
}

void save_policy(const PolicyFile& p, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = "btlab-policy/1";
  j["scenario"] = p.scenario_id;
  j["theta"] =
      std::vector<double>(p.theta.data(), p.theta.data() + p.theta.size());
  if (p.use_nn) {
    const Scenario s = scenario_for_policy(p);
    nlohmann::ordered_json nj;
    nj["hidden"] = s.nn.hidden;
    nj["obs_center"] = {s.nn.obs_center.x(), s.nn.obs_center.y(),
                        s.nn.obs_center.z()};
    nj["obs_scale"] = s.nn.obs_scale;
    nj["box_center"] = {s.nn.box_center.x(), s.nn.box_center.y(),
                        s.nn.box_center.z()};
    nj["box_half"] = {s.nn.box_half.x(), s.nn.box_half.y(),
                      s.nn.box_half.z()};
    j["network"] = std::move(nj);
  } else {
    j["tree"] = tree_to_json(*p.tree);
    j["tree_hash"] = tree_hash(*p.tree);
  }
  write_text_file(path, j.dump(2) + "\n");
}

PolicyFile load_policy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_error(ErrorCode::Io, "cannot open policy '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded())
    throw_error(ErrorCode::Config, "policy '" + path + "' is not valid JSON");
  if (!j.contains("format") || j["format"] != "btlab-policy/1")
    throw_error(ErrorCode::Config, "policy '" + path + "' has wrong format");
  if (!j.contains("scenario") || !j["scenario"].is_string())
    throw_error(ErrorCode::Config, "policy without scenario id");

  PolicyFile p;
  p.scenario_id = j["scenario"].get<std::string>();
  const int want = expected_theta_size(p.scenario_id);
  if (!j.contains("theta") || !j["theta"].is_array())
    throw_error(ErrorCode::Config, "policy without theta");
  const auto vals = j["theta"].get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != want)
    throw_error(ErrorCode::Binding,
                "policy theta has " + std::to_string(vals.size()) +
                    " entries, scenario expects " + std::to_string(want));
  p.theta = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                              static_cast<long>(vals.size()));

  if (p.scenario_id == "obstacle-nn") {
    p.use_nn = true;
    return p;
  }
  if (!j.contains("tree"))
    throw_error(ErrorCode::Config, "policy without tree");
  p.tree = tree_from_json(j["tree"]);
  const std::string h = tree_hash(*p.tree);
  if (!j.contains("tree_hash") || j["tree_hash"] != h)
    throw_error(ErrorCode::Config,
                "policy tree hash mismatch; file is corrupted or edited");
  const std::string expected = expected_hash_for(p.scenario_id);
  if (h != expected)
    throw_error(ErrorCode::Config,
                "policy tree does not match the canonical '" + p.scenario_id +
                    "' structure");
  return p;
}

PolicyFile combine_policies(const PolicyFile& obstacle, const PolicyFile& peg) {
  if (obstacle.scenario_id != "obstacle")
    throw_error(ErrorCode::Splice,
                "first input must be an obstacle policy, got '" +
                    obstacle.scenario_id + "'");
  if (peg.scenario_id != "peg")
    throw_error(ErrorCode::Splice, "second input must be a peg policy, got '" +
                                       peg.scenario_id + "'");
  if (!obstacle.tree || tree_hash(*obstacle.tree) != tree_hash(*obstacle_tree()))
    throw_error(ErrorCode::Splice,
                "obstacle policy tree does not match the canonical structure");
  if (!peg.tree || tree_hash(*peg.tree) != tree_hash(*peg_tree()))
    throw_error(ErrorCode::Splice,
                "peg policy tree does not match the canonical structure");

  const int base = static_cast<int>(obstacle.theta.size());
  const BtNodePtr shifted = shift_bound_indices(peg.tree, base);
  const BtNodePtr tree = splice(obstacle.tree, peg_slot_label(), shifted);
  if (tree_hash(*tree) != tree_hash(*combined_tree()))
    throw_error(ErrorCode::Internal, "combined tree hash mismatch");

  PolicyFile out;
  out.scenario_id = "combined";
  out.theta.resize(obstacle.theta.size() + peg.theta.size());
  out.theta << obstacle.theta, peg.theta;
  out.tree = tree;
  return out;
}

namespace {

const char* kind_label(NodeKind k) {
  switch (k) {
    case NodeKind::Sequence: return "Sequence";
    case NodeKind::Selector: return "Selector";
    case NodeKind::Parallel: return "Parallel";
    case NodeKind::Decorator: return "Decorator";
    case NodeKind::Action: return "Action";
    case NodeKind::Condition: return "Condition";
  }
  return "?";
}

void render_tree(const BtNode& n, int depth, std::string& out) {
  out.append(static_cast<size_t>(depth) * 2, ' ');
  out += n.label;
  out += " [";
  out += kind_label(n.kind);
  if (!n.primitive.empty()) {
    out += ' ';
    out += n.primitive;
  }
  out += ']';
  for (const ParamSlot& s : n.params) {
    out += ' ';
    out += s.name;
    out += '=';
    if (s.index)
      out += "theta[" + std::to_string(*s.index) + "]";
    else
      out += format_g17(*s.value);
  }
  out += '\n';
  for (const BtNodePtr& c : n.children) render_tree(*c, depth + 1, out);
}

std::string unit_for(const std::string& name) {
  if (name == "v_s") return "m/s";
  if (name.rfind("w", 0) == 0 && name.size() > 1 &&
      std::isdigit(static_cast<unsigned char>(name[1])))
    return "";
  return "m";
}

}  // namespace

std::string inspect_policy(const PolicyFile& p) {
  const Scenario s = scenario_for_policy(p);
  std::string out;
  out += "policy: " + p.scenario_id + "\n";
  out += "parameters: " + std::to_string(p.theta.size()) + "\n";
  if (p.use_nn) {
    out += "network: 3-" + std::to_string(s.nn.hidden) + "-3 tanh\n";
  } else {
    out += "tree-hash: " + tree_hash(*p.tree) + "\n";
    out += "tree:\n";
    render_tree(*p.tree, 1, out);
  }
  out += "theta:\n";
  const bool named = static_cast<int>(s.space.names.size()) == p.theta.size();
  for (int i = 0; i < p.theta.size(); ++i) {
    const std::string name =
        named ? s.space.names[static_cast<size_t>(i)]
              : "theta" + std::to_string(i);
    out += "  " + name + " = " + format_g17(p.theta[i]);
    const std::string unit = unit_for(name);
    if (!unit.empty()) out += " [" + unit + "]";
    if (named) {
      out += " in [" + format_g17(s.space.lower[i]) + ", " +
             format_g17(s.space.upper[i]) + "]";
    }
    out += '\n';
  }
  return out;
}

Eigen::VectorXd theta_from_inspect(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool in_theta = false;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line == "theta:") {
      in_theta = true;
      continue;
    }
    if (!in_theta) continue;
    const size_t eq = line.find(" = ");
    if (eq == std::string::npos) break;
    const std::string rest = line.substr(eq + 3);
    vals.push_back(std::strtod(rest.c_str(), nullptr));
  }
  Eigen::VectorXd out(static_cast<long>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) out[static_cast<long>(i)] = vals[i];
  return out;
}

void replay_trial(const PolicyFile& p, std::uint64_t seed, int trial,
                  const std::string& csv_path) {
  if (trial < 0) throw_error(ErrorCode::Config, "trial must be non-negative");
  const Scenario s = scenario_for_policy(p);
  const EpisodeSetup setup = eval_setup(s, seed, trial, false, std::nullopt);
  const EpisodeLog log = run_scenario_episode(s, p.theta, setup);
  write_episode_csv(log, csv_path);
}

}  // namespace btlab
