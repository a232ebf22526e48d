// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/bt.hpp"

#include <map>
#include <mutex>

#include "core/errors.hpp"

namespace btlab {

namespace {

std::map<std::string, ConditionFn>& condition_registry() {
  static std::map<std::string, ConditionFn> reg;
  return reg;
}

std::map<std::string, ActionFn>& action_registry() {
  static std::map<std::string, ActionFn> reg;
  return reg;
}

void register_builtins_once() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    auto& cond = condition_registry();
    auto& act = action_registry();

    cond["always-success"] = [](const ParamView&, const Blackboard&) {
      return true;
    };
    cond["always-failure"] = [](const ParamView&, const Blackboard&) {
      return false;
    };
    cond["tip-above-z"] = [](const ParamView& p, const Blackboard& bb) {
      return bb.peg_position.z() > p["z"];
    };
    cond["tip-below-z"] = [](const ParamView& p, const Blackboard& bb) {
      return bb.peg_position.z() < p["z"];
    };
    cond["tip-beyond-x"] = [](const ParamView& p, const Blackboard& bb) {
      return bb.peg_position.x() > p["x"];
    };
    cond["tip-in-cylinder"] = [](const ParamView& p, const Blackboard& bb) {
      const Eigen::Vector2d c(p["x"], p["y"]);
      const Eigen::Vector2d xy = bb.peg_position.head<2>();
      return (xy - c).norm() < p["radius"] &&
             bb.peg_position.z() < p["z-top"];
    };

    act["move-to"] = [](const ParamView& p, Blackboard& bb) {
      AttractorCommand cmd;
      cmd.goal = {p["x"], p["y"], p["z"]};
      cmd.path_velocity = p["speed"];
      if (auto vs = p.find("spiral-velocity")) cmd.spiral_velocity = *vs;
      if (auto c = p.find("spiral-pitch")) cmd.spiral_pitch = *c;
      bb.skill_command = cmd;
      return TickStatus::Running;
    };
    // Straight vertical descent: the goal xy tracks the current tip, so the
    // motion never steers sideways toward a nominal target.
    act["descend"] = [](const ParamView& p, Blackboard& bb) {
      AttractorCommand cmd;
      cmd.goal = {bb.peg_position.x(), bb.peg_position.y(), p["z"]};
      cmd.path_velocity = p["speed"];
      bb.skill_command = cmd;
      return TickStatus::Running;
    };
  });
}

const ParamSlot* find_slot(const BtNode& n, std::string_view name) {
  for (const ParamSlot& s : n.params)
    if (s.name == name) return &s;
  return nullptr;
}

double resolve_slot(const ParamSlot& s, std::span<const double> theta) {
  if (s.index) {
    if (*s.index < 0 || static_cast<size_t>(*s.index) >= theta.size())
      throw_error(ErrorCode::Config,
                  "parameter '" + s.name + "' bound to index " +
                      std::to_string(*s.index) + " but vector has " +
                      std::to_string(theta.size()) + " entries");
    return theta[static_cast<size_t>(*s.index)];
  }
  return *s.value;
}

void validate_slots(const std::vector<ParamSlot>& slots) {
  for (size_t i = 0; i < slots.size(); ++i) {
    const ParamSlot& s = slots[i];
    if (s.name.empty())
      throw_error(ErrorCode::Config, "parameter slot with empty name");
    if (s.index.has_value() == s.value.has_value())
      throw_error(ErrorCode::Config, "parameter '" + s.name +
                                         "' must have exactly one of "
                                         "index or value");
    if (s.index && *s.index < 0)
      throw_error(ErrorCode::Config,
                  "parameter '" + s.name + "' has a negative index");
    for (size_t j = 0; j < i; ++j)
      if (slots[j].name == s.name)
        throw_error(ErrorCode::Config,
                    "duplicate parameter name '" + s.name + "'");
  }
}

BtNodePtr make_control(NodeKind kind, std::string label,
                       std::vector<BtNodePtr> children) {
  if (label.empty()) throw_error(ErrorCode::Structure, "node without label");
  if (children.empty())
    throw_error(ErrorCode::Structure,
                "control node '" + label + "' has no children");
  for (const BtNodePtr& c : children)
    if (!c)
      throw_error(ErrorCode::Structure,
                  "control node '" + label + "' has a null child");
  auto n = std::make_shared<BtNode>();
  n->kind = kind;
  n->label = std::move(label);
  n->children = std::move(children);
  return n;
}

}  // namespace

double ParamView::operator[](std::string_view name) const {
  const ParamSlot* s = find_slot(*node_, name);
  if (!s)
    throw_error(ErrorCode::Config, "node '" + node_->label +
                                       "' has no parameter '" +
                                       std::string(name) + "'");
  return resolve_slot(*s, theta_);
}

std::optional<double> ParamView::find(std::string_view name) const {
  const ParamSlot* s = find_slot(*node_, name);
  if (!s) return std::nullopt;
  return resolve_slot(*s, theta_);
}

void register_condition(const std::string& name, ConditionFn fn) {
  register_builtins_once();
  condition_registry()[name] = std::move(fn);
}

void register_action(const std::string& name, ActionFn fn) {
  register_builtins_once();
  action_registry()[name] = std::move(fn);
}

BtNodePtr make_sequence(std::string label, std::vector<BtNodePtr> children) {
  return make_control(NodeKind::Sequence, std::move(label),
                      std::move(children));
}
BtNodePtr make_selector(std::string label, std::vector<BtNodePtr> children) {
  return make_control(NodeKind::Selector, std::move(label),
                      std::move(children));
}
BtNodePtr make_parallel(std::string label, std::vector<BtNodePtr> children) {
  return make_control(NodeKind::Parallel, std::move(label),
                      std::move(children));
}

BtNodePtr make_decorator(std::string label, DecoratorOp op, BtNodePtr child) {
  if (label.empty()) throw_error(ErrorCode::Structure, "node without label");
  if (!child)
    throw_error(ErrorCode::Structure,
                "decorator '" + label + "' has no child");
  auto n = std::make_shared<BtNode>();
  n->kind = NodeKind::Decorator;
  n->label = std::move(label);
  n->deco = op;
  n->children.push_back(std::move(child));
  return n;
}

BtNodePtr make_condition(std::string label, std::string primitive,
                         std::vector<ParamSlot> params) {
  register_builtins_once();
  if (label.empty()) throw_error(ErrorCode::Structure, "node without label");
  auto it = condition_registry().find(primitive);
  if (it == condition_registry().end())
    throw_error(ErrorCode::Config,
                "unknown condition primitive '" + primitive + "'");
  validate_slots(params);
  auto n = std::make_shared<BtNode>();
  n->kind = NodeKind::Condition;
  n->label = std::move(label);
  n->primitive = std::move(primitive);
  n->params = std::move(params);
  n->condition = it->second;
  return n;
}

BtNodePtr make_action(std::string label, std::string primitive,
                      std::vector<ParamSlot> params) {
  register_builtins_once();
  if (label.empty()) throw_error(ErrorCode::Structure, "node without label");
  auto it = action_registry().find(primitive);
  if (it == action_registry().end())
    throw_error(ErrorCode::Config,
                "unknown action primitive '" + primitive + "'");
  validate_slots(params);
  auto n = std::make_shared<BtNode>();
  n->kind = NodeKind::Action;
  n->label = std::move(label);
  n->primitive = std::move(primitive);
  n->params = std::move(params);
  n->action = it->second;
  return n;
}

TickStatus tick(const BtNode& node, Blackboard& bb,
                std::span<const double> theta) {
  switch (node.kind) {
    case NodeKind::Sequence:
      for (const BtNodePtr& c : node.children) {
        const TickStatus s = tick(*c, bb, theta);
        if (s != TickStatus::Success) return s;
      }
      return TickStatus::Success;
    case NodeKind::Selector:
      for (const BtNodePtr& c : node.children) {
        const TickStatus s = tick(*c, bb, theta);
        if (s != TickStatus::Failure) return s;
      }
      return TickStatus::Failure;
    case NodeKind::Parallel: {
      bool any_failure = false;
      bool any_running = false;
      for (const BtNodePtr& c : node.children) {
        const TickStatus s = tick(*c, bb, theta);
        if (s == TickStatus::Failure) any_failure = true;
        if (s == TickStatus::Running) any_running = true;
      }
      if (any_failure) return TickStatus::Failure;
      if (any_running) return TickStatus::Running;
      return TickStatus::Success;
    }
    case NodeKind::Decorator: {
      const TickStatus s = tick(*node.children[0], bb, theta);
      if (node.deco == DecoratorOp::Forward) return s;
      if (s == TickStatus::Success) return TickStatus::Failure;
      if (s == TickStatus::Failure) return TickStatus::Success;
      return TickStatus::Running;
    }
    case NodeKind::Condition:
      return node.condition(ParamView(node, theta), bb)
                 ? TickStatus::Success
                 : TickStatus::Failure;
    case NodeKind::Action:
      return node.action(ParamView(node, theta), bb);
  }
  throw_error(ErrorCode::Internal, "unhandled node kind");
}

namespace {

const char* kind_name(NodeKind k) {
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

NodeKind kind_from_name(const std::string& s) {
  if (s == "Sequence") return NodeKind::Sequence;
  if (s == "Selector") return NodeKind::Selector;
  if (s == "Parallel") return NodeKind::Parallel;
  if (s == "Decorator") return NodeKind::Decorator;
  if (s == "Action") return NodeKind::Action;
  if (s == "Condition") return NodeKind::Condition;
  throw_error(ErrorCode::Config, "unknown node kind '" + s + "'");
}

SlotRole infer_role(NodeKind kind, const std::string& name) {
  if (kind == NodeKind::Condition) return SlotRole::Threshold;
  if (name == "x" || name == "y" || name == "z") return SlotRole::GoalCoordinate;
  return SlotRole::SkillParam;
}

}  // namespace

nlohmann::ordered_json tree_to_json(const BtNode& node) {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(node.kind);
  j["label"] = node.label;
  if (node.kind == NodeKind::Decorator)
    j["op"] = node.deco == DecoratorOp::Forward ? "forward" : "invert";
  if (!node.primitive.empty()) j["primitive"] = node.primitive;
  if (!node.params.empty()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const ParamSlot& s : node.params) {
      nlohmann::ordered_json p;
      p["name"] = s.name;
      if (s.index)
        p["index"] = *s.index;
      else
        p["value"] = *s.value;
      arr.push_back(std::move(p));
    }
    j["params"] = std::move(arr);
  }
  if (!node.children.empty()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const BtNodePtr& c : node.children) arr.push_back(tree_to_json(*c));
    j["children"] = std::move(arr);
  }
  return j;
}

BtNodePtr tree_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw_error(ErrorCode::Config, "tree node must be an object");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw_error(ErrorCode::Config, "tree node without kind");
  if (!j.contains("label") || !j["label"].is_string())
    throw_error(ErrorCode::Config, "tree node without label");
  const NodeKind kind = kind_from_name(j["kind"].get<std::string>());
  std::string label = j["label"].get<std::string>();

  std::vector<ParamSlot> params;
  if (j.contains("params")) {
    if (!j["params"].is_array())
      throw_error(ErrorCode::Config, "params must be an array");
    for (const auto& p : j["params"]) {
      if (!p.is_object() || !p.contains("name") || !p["name"].is_string())
        throw_error(ErrorCode::Config, "parameter slot without name");
      ParamSlot s;
      s.name = p["name"].get<std::string>();
      s.role = infer_role(kind, s.name);
      if (p.contains("index")) {
        if (!p["index"].is_number_integer())
          throw_error(ErrorCode::Config,
                      "parameter '" + s.name + "' index must be an integer");
        s.index = p["index"].get<int>();
      }
      if (p.contains("value")) {
        if (!p["value"].is_number())
          throw_error(ErrorCode::Config,
                      "parameter '" + s.name + "' value must be a number");
        s.value = p["value"].get<double>();
      }
      params.push_back(std::move(s));
    }
  }

  std::vector<BtNodePtr> children;
  if (j.contains("children")) {
    if (!j["children"].is_array())
      throw_error(ErrorCode::Config, "children must be an array");
    for (const auto& c : j["children"]) children.push_back(tree_from_json(c));
  }

  switch (kind) {
    case NodeKind::Sequence:
    case NodeKind::Selector:
    case NodeKind::Parallel:
      if (!params.empty())
        throw_error(ErrorCode::Config,
                    "control node '" + label + "' cannot carry parameters");
      return make_control(kind, std::move(label), std::move(children));
    case NodeKind::Decorator: {
      if (!j.contains("op") || !j["op"].is_string())
        throw_error(ErrorCode::Config,
                    "decorator '" + label + "' without op");
      const std::string op = j["op"].get<std::string>();
      DecoratorOp d;
      if (op == "forward")
        d = DecoratorOp::Forward;
      else if (op == "invert")
        d = DecoratorOp::Invert;
      else
        throw_error(ErrorCode::Config,
                    "decorator '" + label + "' has unknown op '" + op + "'");
      if (children.size() != 1)
        throw_error(ErrorCode::Structure,
                    "decorator '" + label + "' must have exactly one child");
      return make_decorator(std::move(label), d, std::move(children[0]));
    }
    case NodeKind::Condition:
    case NodeKind::Action: {
      if (!children.empty())
        throw_error(ErrorCode::Structure,
                    "leaf '" + label + "' cannot have children");
      if (!j.contains("primitive") || !j["primitive"].is_string())
        throw_error(ErrorCode::Config, "leaf '" + label + "' without primitive");
      std::string prim = j["primitive"].get<std::string>();
      if (kind == NodeKind::Condition)
        return make_condition(std::move(label), std::move(prim),
                              std::move(params));
      return make_action(std::move(label), std::move(prim), std::move(params));
    }
  }
  throw_error(ErrorCode::Internal, "unhandled node kind");
}

BtNodePtr tree_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw_error(ErrorCode::Config, "tree text is not valid JSON");
  return tree_from_json(j);
}

std::string tree_hash(const BtNode& node) {
  const std::string text = tree_to_json(node).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

int count_label(const BtNode& n, const std::string& label) {
  int c = n.label == label ? 1 : 0;
  for (const BtNodePtr& ch : n.children) c += count_label(*ch, label);
  return c;
}

BtNodePtr rebuild_with(const BtNodePtr& n, const std::string& label,
                       const BtNodePtr& replacement) {
  if (n->label == label) return replacement;
  bool changed = false;
  std::vector<BtNodePtr> children;
  children.reserve(n->children.size());
  for (const BtNodePtr& c : n->children) {
    BtNodePtr r = rebuild_with(c, label, replacement);
    changed = changed || r != c;
    children.push_back(std::move(r));
  }
  if (!changed) return n;
  auto copy = std::make_shared<BtNode>(*n);
  copy->children = std::move(children);
  return copy;
}

}  // namespace

BtNodePtr splice(const BtNodePtr& host, const std::string& label,
                 const BtNodePtr& replacement) {
  if (!host || !replacement)
    throw_error(ErrorCode::Splice, "splice requires host and replacement");
  const int matches = count_label(*host, label);
  if (matches == 0)
    throw_error(ErrorCode::Splice, "splice label '" + label + "' not found");
  if (matches > 1)
    throw_error(ErrorCode::Splice,
                "splice label '" + label + "' is ambiguous (" +
                    std::to_string(matches) + " matches)");
  return rebuild_with(host, label, replacement);
}

namespace {

void collect_bindings(const BtNode& n, std::span<const double> theta,
                      std::vector<Binding>& out) {
  for (const ParamSlot& s : n.params) {
    if (!s.index) continue;
    if (*s.index < 0 || static_cast<size_t>(*s.index) >= theta.size())
      throw_error(ErrorCode::Binding,
                  "node '" + n.label + "' parameter '" + s.name +
                      "' bound to index " + std::to_string(*s.index) +
                      " but vector has " + std::to_string(theta.size()) +
                      " entries");
    out.push_back(Binding{n.label, s.name, s.role, *s.index,
                          theta[static_cast<size_t>(*s.index)]});
  }
  for (const BtNodePtr& c : n.children) collect_bindings(*c, theta, out);
}

}  // namespace

std::vector<Binding> bind_params(const BtNode& root,
                                 std::span<const double> theta) {
  std::vector<Binding> out;
  collect_bindings(root, theta, out);
  return out;
}

int max_bound_index(const BtNode& root) {
  int mx = -1;
  for (const ParamSlot& s : root.params)
    if (s.index) mx = std::max(mx, *s.index);
  for (const BtNodePtr& c : root.children)
    mx = std::max(mx, max_bound_index(*c));
  return mx;
}

BtNodePtr shift_bound_indices(const BtNodePtr& root, int offset) {
  bool changed = false;
  std::vector<BtNodePtr> children;
  children.reserve(root->children.size());
  for (const BtNodePtr& c : root->children) {
    BtNodePtr r = shift_bound_indices(c, offset);
    changed = changed || r != c;
    children.push_back(std::move(r));
  }
  std::vector<ParamSlot> params = root->params;
  for (ParamSlot& s : params) {
    if (s.index) {
      const int shifted = *s.index + offset;
      if (shifted < 0)
        throw_error(ErrorCode::Binding, "index shift drives parameter '" +
                                            s.name + "' below zero");
      s.index = shifted;
      changed = true;
    }
  }
  if (!changed) return root;
  auto copy = std::make_shared<BtNode>(*root);
  copy->children = std::move(children);
  copy->params = std::move(params);
  return copy;
}

}  // namespace btlab
