// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <vector>

#include "core/bt.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "support.hpp"

using namespace btlab;
using namespace btlab::testsupport;

namespace {

BtNodePtr cond_leaf(const std::string& label, int id, bool ok) {
  register_fuzz_primitives();
  return make_condition(label, "fuzz-cond",
                        {fixed_param("id", SlotRole::Threshold, id),
                         fixed_param("ok", SlotRole::Threshold, ok ? 1 : 0)});
}

BtNodePtr act_leaf(const std::string& label, int id, int code) {
  register_fuzz_primitives();
  return make_action(label, "fuzz-act",
                     {fixed_param("id", SlotRole::SkillParam, id),
                      fixed_param("code", SlotRole::SkillParam, code)});
}

}  // namespace

TEST_CASE("selector returns the first non-failure child and short-circuits") {
  auto tree = make_selector(
      "root", {cond_leaf("c0", 0, false), act_leaf("a1", 1, 2),
               act_leaf("a2", 2, 0)});
  Blackboard bb;
  fuzz_visits().clear();
  CHECK(tick(tree, bb, {}) == TickStatus::Running);
  CHECK(fuzz_visits() == std::vector<int>{0, 1});
}

TEST_CASE("sequence demands success from every child") {
  auto tree = make_sequence(
      "root", {cond_leaf("c0", 0, true), act_leaf("a1", 1, 1),
               act_leaf("a2", 2, 0)});
  Blackboard bb;
  fuzz_visits().clear();
  CHECK(tick(tree, bb, {}) == TickStatus::Failure);
  CHECK(fuzz_visits() == std::vector<int>{0, 1});

  auto all = make_sequence(
      "root2", {cond_leaf("d0", 0, true), act_leaf("b1", 1, 0)});
  fuzz_visits().clear();
  CHECK(tick(all, bb, {}) == TickStatus::Success);
  CHECK(fuzz_visits() == std::vector<int>{0, 1});
}

TEST_CASE("parallel ticks every child and aggregates") {
  auto tree = make_parallel(
      "root", {act_leaf("a0", 0, 0), act_leaf("a1", 1, 2),
               act_leaf("a2", 2, 0)});
  Blackboard bb;
  fuzz_visits().clear();
  CHECK(tick(tree, bb, {}) == TickStatus::Running);
  CHECK(fuzz_visits() == std::vector<int>{0, 1, 2});

  auto failing = make_parallel(
      "root2", {act_leaf("b0", 0, 0), act_leaf("b1", 1, 1),
                act_leaf("b2", 2, 2)});
  fuzz_visits().clear();
  CHECK(tick(failing, bb, {}) == TickStatus::Failure);
  CHECK(fuzz_visits().size() == 3);
}

TEST_CASE("decorator forwards or inverts") {
  Blackboard bb;
  auto fwd = make_decorator("d", DecoratorOp::Forward, act_leaf("a", 0, 2));
  CHECK(tick(fwd, bb, {}) == TickStatus::Running);
  auto inv_s = make_decorator("i1", DecoratorOp::Invert, cond_leaf("c1", 0, true));
  CHECK(tick(inv_s, bb, {}) == TickStatus::Failure);
  auto inv_f = make_decorator("i2", DecoratorOp::Invert, cond_leaf("c2", 0, false));
  CHECK(tick(inv_f, bb, {}) == TickStatus::Success);
  auto inv_r = make_decorator("i3", DecoratorOp::Invert, act_leaf("a3", 0, 2));
  CHECK(tick(inv_r, bb, {}) == TickStatus::Running);
}

TEST_CASE("conditions are boolean and never running") {
  Blackboard bb;
  CHECK(tick(cond_leaf("t", 0, true), bb, {}) == TickStatus::Success);
  CHECK(tick(cond_leaf("f", 1, false), bb, {}) == TickStatus::Failure);
}

TEST_CASE("builtin predicates read the blackboard") {
  Blackboard bb;
  bb.peg_position = {0.55, 0.01, 0.115};
  std::array<double, 1> theta{0.12};
  auto below = make_condition("b", "tip-below-z",
                              {bound_param("z", SlotRole::Threshold, 0)});
  CHECK(tick(below, bb, theta) == TickStatus::Success);
  bb.peg_position.z() = 0.125;
  CHECK(tick(below, bb, theta) == TickStatus::Failure);

  auto cyl = make_condition(
      "c", "tip-in-cylinder",
      {fixed_param("x", SlotRole::Threshold, 0.55),
       fixed_param("y", SlotRole::Threshold, 0.0),
       fixed_param("radius", SlotRole::Threshold, 0.03),
       fixed_param("z-top", SlotRole::Threshold, 0.30)});
  bb.peg_position = {0.56, 0.0, 0.2};
  CHECK(tick(cyl, bb, {}) == TickStatus::Success);
  bb.peg_position = {0.60, 0.0, 0.2};
  CHECK(tick(cyl, bb, {}) == TickStatus::Failure);
  bb.peg_position = {0.56, 0.0, 0.35};
  CHECK(tick(cyl, bb, {}) == TickStatus::Failure);
}

TEST_CASE("move-to writes one command with optional overlay") {
  auto act = make_action(
      "go", "move-to",
      {fixed_param("x", SlotRole::GoalCoordinate, 0.5),
       fixed_param("y", SlotRole::GoalCoordinate, 0.1),
       fixed_param("z", SlotRole::GoalCoordinate, 0.2),
       fixed_param("speed", SlotRole::SkillParam, 0.25)});
  Blackboard bb;
  CHECK(tick(act, bb, {}) == TickStatus::Running);
  REQUIRE(bb.skill_command.has_value());
  CHECK(bb.skill_command->goal == Eigen::Vector3d(0.5, 0.1, 0.2));
  CHECK(bb.skill_command->path_velocity == 0.25);
  CHECK(bb.skill_command->spiral_velocity == 0.0);

  auto spiral = make_action(
      "search", "move-to",
      {fixed_param("x", SlotRole::GoalCoordinate, 0.5),
       fixed_param("y", SlotRole::GoalCoordinate, 0.0),
       fixed_param("z", SlotRole::GoalCoordinate, 0.1),
       fixed_param("speed", SlotRole::SkillParam, 0.05),
       fixed_param("spiral-velocity", SlotRole::SkillParam, 0.01),
       fixed_param("spiral-pitch", SlotRole::SkillParam, 0.0012)});
  bb.skill_command.reset();
  CHECK(tick(spiral, bb, {}) == TickStatus::Running);
  CHECK(bb.skill_command->spiral_velocity == 0.01);
  CHECK(bb.skill_command->spiral_pitch == 0.0012);
}

TEST_CASE("slot validation rejects malformed parameters") {
  ParamSlot both;
  both.name = "x";
  both.index = 0;
  both.value = 1.0;
  CHECK_THROWS_AS(make_condition("n", "tip-below-z", {both}), Error);

  ParamSlot neither;
  neither.name = "z";
  CHECK_THROWS_AS(make_condition("n", "tip-below-z", {neither}), Error);

  CHECK_THROWS_AS(
      make_condition("n", "tip-below-z",
                     {bound_param("z", SlotRole::Threshold, -1)}),
      Error);
  CHECK_THROWS_AS(
      make_action("n", "move-to",
                  {fixed_param("x", SlotRole::GoalCoordinate, 1.0),
                   fixed_param("x", SlotRole::GoalCoordinate, 2.0)}),
      Error);
}

TEST_CASE("structural constructors validate their inputs") {
  CHECK_THROWS_AS(make_sequence("empty", {}), Error);
  CHECK_THROWS_AS(make_selector("", {cond_leaf("c", 0, true)}), Error);
  CHECK_THROWS_AS(make_condition("x", "no-such-predicate", {}), Error);
  CHECK_THROWS_AS(make_action("x", "no-such-skill", {}), Error);
}

TEST_CASE("bound slots resolve against theta and report errors") {
  auto tree = make_selector(
      "root",
      {make_condition("gate", "tip-below-z",
                      {bound_param("z", SlotRole::Threshold, 1)}),
       make_action("go", "move-to",
                   {bound_param("x", SlotRole::GoalCoordinate, 0),
                    fixed_param("y", SlotRole::GoalCoordinate, 0.0),
                    fixed_param("z", SlotRole::GoalCoordinate, 0.2),
                    fixed_param("speed", SlotRole::SkillParam, 0.25)})});
  std::array<double, 2> theta{0.5, 0.12};
  Blackboard bb;
  bb.peg_position = {0.0, 0.0, 0.1};
  CHECK(tick(tree, bb, theta) == TickStatus::Success);
  bb.peg_position.z() = 0.2;
  CHECK(tick(tree, bb, theta) == TickStatus::Running);
  CHECK(bb.skill_command->goal.x() == 0.5);

  // Short vectors fail loudly instead of reading out of range.
  std::array<double, 1> wrong{0.5};
  CHECK_THROWS_AS(tick(tree, bb, wrong), Error);
}

TEST_CASE("bind report lists bound slots in traversal order") {
  auto tree = make_sequence(
      "root",
      {make_condition("gate", "tip-above-z",
                      {bound_param("z", SlotRole::Threshold, 1)}),
       make_action("go", "move-to",
                   {bound_param("x", SlotRole::GoalCoordinate, 0),
                    fixed_param("y", SlotRole::GoalCoordinate, 0.0),
                    bound_param("z", SlotRole::GoalCoordinate, 2),
                    fixed_param("speed", SlotRole::SkillParam, 0.25)})});
  std::array<double, 3> theta{7.0, 8.0, 9.0};
  const std::vector<Binding> rows = bind_params(*tree, theta);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].node_label == "gate");
  CHECK(rows[0].param_name == "z");
  CHECK(rows[0].index == 1);
  CHECK(rows[0].value == 8.0);
  CHECK(rows[1].node_label == "go");
  CHECK(rows[1].index == 0);
  CHECK(rows[2].index == 2);
  CHECK(max_bound_index(*tree) == 2);

  std::array<double, 2> wrong{1.0, 2.0};
  CHECK_THROWS_AS(bind_params(*tree, wrong), Error);
}

TEST_CASE("shift_bound_indices offsets every bound slot") {
  auto tree = make_selector(
      "root",
      {make_condition("gate", "tip-below-z",
                      {bound_param("z", SlotRole::Threshold, 0)}),
       make_action("go", "move-to",
                   {bound_param("x", SlotRole::GoalCoordinate, 1),
                    fixed_param("y", SlotRole::GoalCoordinate, 0.5),
                    fixed_param("z", SlotRole::GoalCoordinate, 0.2),
                    fixed_param("speed", SlotRole::SkillParam, 0.25)})});
  const BtNodePtr shifted = shift_bound_indices(tree, 6);
  CHECK(max_bound_index(*shifted) == 7);
  std::vector<double> theta(8, 0.0);
  theta[6] = 0.33;
  theta[7] = 0.44;
  const std::vector<Binding> rows = bind_params(*shifted, theta);
  CHECK(rows[0].index == 6);
  CHECK(rows[0].value == 0.33);
  CHECK(rows[1].index == 7);
  CHECK(rows[1].value == 0.44);
  // Fixed slots keep their values.
  auto view_theta = std::span<const double>(theta);
  Blackboard bb;
  bb.peg_position = {0.0, 0.0, 1.0};
  CHECK(tick(shifted, bb, view_theta) == TickStatus::Running);
  CHECK(bb.skill_command->goal.y() == 0.5);
}

TEST_CASE("canonical serialization is stable and hashable") {
  // Hash of a minimal leaf frozen against an independent FNV-1a over the
  // canonical text.
  auto leaf = make_condition("c", "always-success", {});
  CHECK(tree_to_json(*leaf).dump() ==
        "{\"kind\":\"Condition\",\"label\":\"c\","
        "\"primitive\":\"always-success\"}");
  CHECK(tree_hash(*leaf) == "fnv1a64:40f34c1f700bff8f");

  auto tree = make_selector(
      "root", {make_condition("c", "always-success", {}),
               make_action("a", "move-to",
                           {bound_param("x", SlotRole::GoalCoordinate, 0),
                            fixed_param("y", SlotRole::GoalCoordinate, 0.5),
                            fixed_param("z", SlotRole::GoalCoordinate, 0.3),
                            fixed_param("speed", SlotRole::SkillParam,
                                        0.25)})});
  CHECK(tree_hash(*tree) == "fnv1a64:ca4cf03be650e2aa");
}

TEST_CASE("json round trip preserves structure bit for bit") {
  auto tree = make_selector(
      "root",
      {make_sequence("branch",
                     {cond_leaf("c0", 0, true),
                      make_decorator("not", DecoratorOp::Invert,
                                     cond_leaf("c1", 1, false))}),
       act_leaf("a0", 2, 2)});
  const std::string text = tree_to_json(*tree).dump();
  const BtNodePtr back = tree_from_json_text(text);
  CHECK(tree_to_json(*back).dump() == text);
  CHECK(tree_hash(*back) == tree_hash(*tree));
}

TEST_CASE("loader rejects malformed documents") {
  CHECK_THROWS_AS(tree_from_json_text("not json"), Error);
  CHECK_THROWS_AS(tree_from_json_text("{\"label\":\"x\"}"), Error);
  CHECK_THROWS_AS(
      tree_from_json_text("{\"kind\":\"Sequence\",\"label\":\"s\"}"), Error);
  CHECK_THROWS_AS(
      tree_from_json_text(
          "{\"kind\":\"Condition\",\"label\":\"c\"}"),
      Error);
  CHECK_THROWS_AS(
      tree_from_json_text("{\"kind\":\"Widget\",\"label\":\"w\"}"), Error);
}

TEST_CASE("splice replaces the unique label") {
  auto host = make_selector(
      "root", {cond_leaf("slot", 0, false), act_leaf("rest", 1, 0)});
  auto guest = act_leaf("guest", 9, 0);
  const BtNodePtr out = splice(host, "slot", guest);
  Blackboard bb;
  fuzz_visits().clear();
  CHECK(tick(out, bb, {}) == TickStatus::Success);
  CHECK(fuzz_visits() == std::vector<int>{9});
  // The host is untouched.
  fuzz_visits().clear();
  CHECK(tick(host, bb, {}) == TickStatus::Success);
  CHECK(fuzz_visits() == std::vector<int>{0, 1});
}

TEST_CASE("splice rejects missing and ambiguous labels") {
  auto host = make_selector(
      "root", {cond_leaf("twin", 0, false), cond_leaf("twin", 1, false)});
  auto guest = act_leaf("g", 2, 0);
  CHECK_THROWS_AS(splice(host, "absent", guest), Error);
  CHECK_THROWS_AS(splice(host, "twin", guest), Error);
  try {
    splice(host, "absent", guest);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Splice);
  }
}

TEST_CASE("randomized trees satisfy the tick property suite") {
  Rng rng(20260822);
  for (int i = 0; i < 2000; ++i) REQUIRE(fuzz_tree_properties(rng));
}
