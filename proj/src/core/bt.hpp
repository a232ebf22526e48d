// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/skills.hpp"

namespace btlab {

enum class TickStatus { Success, Failure, Running };

inline char tick_status_letter(TickStatus s) {
  switch (s) {
    case TickStatus::Success: return 'S';
    case TickStatus::Failure: return 'F';
    case TickStatus::Running: return 'R';
  }
  return '?';
}

enum class NodeKind { Sequence, Selector, Parallel, Decorator, Action, Condition };

// Informational grouping of a slot, used for display units.
enum class SlotRole { Threshold, GoalCoordinate, SkillParam };

// A leaf parameter that is either bound to one entry of the flat parameter
// vector or fixed to a constant. Exactly one of index/value is set.
struct ParamSlot {
  std::string name;
  SlotRole role = SlotRole::Threshold;
  std::optional<int> index;
  std::optional<double> value;
};

inline ParamSlot fixed_param(std::string name, SlotRole role, double value) {
  return ParamSlot{std::move(name), role, std::nullopt, value};
}
inline ParamSlot bound_param(std::string name, SlotRole role, int index) {
  return ParamSlot{std::move(name), role, index, std::nullopt};
}

// Shared state between the simulator and the tree. Leaves read poses and
// write at most one movement command per tick.
struct Blackboard {
  Eigen::Vector3d end_effector_position{0.0, 0.0, 0.0};
  Eigen::Quaterniond end_effector_orientation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d peg_position{0.0, 0.0, 0.0};
  double contact_force_proxy = 0.0;
  double elapsed_time = 0.0;
  std::optional<AttractorCommand> skill_command;
};

class BtNode;
using BtNodePtr = std::shared_ptr<const BtNode>;

// Read access to a leaf's parameters with the bound entries resolved
// against a parameter vector.
class ParamView {
 public:
  ParamView(const BtNode& node, std::span<const double> theta)
      : node_(&node), theta_(theta) {}
  double operator[](std::string_view name) const;
  std::optional<double> find(std::string_view name) const;

 private:
  const BtNode* node_;
  std::span<const double> theta_;
};

// Conditions are boolean by construction and therefore never Running.
using ConditionFn = std::function<bool(const ParamView&, const Blackboard&)>;
using ActionFn = std::function<TickStatus(const ParamView&, Blackboard&)>;

enum class DecoratorOp { Forward, Invert };

// Immutable tree node; trees share subtrees freely.
class BtNode {
 public:
  NodeKind kind = NodeKind::Sequence;
  std::string label;
  std::string primitive;  // leaf primitive name, empty for control nodes
  DecoratorOp deco = DecoratorOp::Forward;
  std::vector<ParamSlot> params;
  std::vector<BtNodePtr> children;
  ConditionFn condition;  // set when kind == Condition
  ActionFn action;        // set when kind == Action
};

// Primitive registry. Built-in movement and predicate primitives are
// registered on first use; tests may add scripted primitives.
void register_condition(const std::string& name, ConditionFn fn);
void register_action(const std::string& name, ActionFn fn);

// Constructors validate arity and primitive names.
BtNodePtr make_sequence(std::string label, std::vector<BtNodePtr> children);
BtNodePtr make_selector(std::string label, std::vector<BtNodePtr> children);
BtNodePtr make_parallel(std::string label, std::vector<BtNodePtr> children);
BtNodePtr make_decorator(std::string label, DecoratorOp op, BtNodePtr child);
BtNodePtr make_condition(std::string label, std::string primitive,
                         std::vector<ParamSlot> params);
BtNodePtr make_action(std::string label, std::string primitive,
                      std::vector<ParamSlot> params);

// One synchronous tick. Children are visited left to right; Sequence stops
// at the first non-Success child, Selector at the first non-Failure child,
// Parallel always ticks every child.
TickStatus tick(const BtNode& node, Blackboard& bb,
                std::span<const double> theta);
inline TickStatus tick(const BtNodePtr& node, Blackboard& bb,
                       std::span<const double> theta) {
  return tick(*node, bb, theta);
}

// Serialization. tree_to_json emits a canonical field order so that equal
// trees produce byte-identical text; tree_hash is FNV-1a 64 over that text.
nlohmann::ordered_json tree_to_json(const BtNode& node);
BtNodePtr tree_from_json(const nlohmann::json& j);
BtNodePtr tree_from_json_text(const std::string& text);
std::string tree_hash(const BtNode& node);

// Replaces the unique node carrying `label` with `replacement` and returns
// the new tree; missing or ambiguous labels raise a splice error.
BtNodePtr splice(const BtNodePtr& host, const std::string& label,
                 const BtNodePtr& replacement);

// One row per bound slot, in depth-first traversal order.
struct Binding {
  std::string node_label;
  std::string param_name;
  SlotRole role = SlotRole::Threshold;
  int index = 0;
  double value = 0.0;
};
std::vector<Binding> bind_params(const BtNode& root,
                                 std::span<const double> theta);

// Highest bound index in the tree, or -1 when fully fixed.
int max_bound_index(const BtNode& root);

// Copy of the tree with every bound index shifted by `offset`; used when
// concatenating parameter vectors of composed trees.
BtNodePtr shift_bound_indices(const BtNodePtr& root, int offset);

}  // namespace btlab
