// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/bt.hpp"
#include "core/rng.hpp"

namespace btlab::testsupport {

// Visit log shared by the scripted fuzz primitives; each leaf records its id
// when ticked so tests can assert exact tick order.
inline std::vector<int>& fuzz_visits() {
  static std::vector<int> v;
  return v;
}

inline void register_fuzz_primitives() {
  static bool done = false;
  if (done) return;
  done = true;
  register_condition("fuzz-cond", [](const ParamView& p, const Blackboard&) {
    fuzz_visits().push_back(static_cast<int>(p["id"]));
    return p["ok"] > 0.5;
  });
  register_action("fuzz-act", [](const ParamView& p, Blackboard&) {
    fuzz_visits().push_back(static_cast<int>(p["id"]));
    const int code = static_cast<int>(p["code"]);
    if (code == 0) return TickStatus::Success;
    if (code == 1) return TickStatus::Failure;
    return TickStatus::Running;
  });
}

// Structural mirror of a generated tree, interpreted independently of the
// production tick so the two implementations check each other.
struct MirrorNode {
  enum Kind { Seq, Sel, Par, DecoFwd, DecoInv, Cond, Act };
  Kind kind = Seq;
  int id = -1;      // leaf visit id
  int code = 0;     // leaf result: 0 success, 1 failure, 2 running
  std::vector<MirrorNode> children;
};

inline TickStatus ref_tick(const MirrorNode& n, std::vector<int>& visits) {
  switch (n.kind) {
    case MirrorNode::Seq:
      for (const MirrorNode& c : n.children) {
        const TickStatus s = ref_tick(c, visits);
        if (s != TickStatus::Success) return s;
      }
      return TickStatus::Success;
    case MirrorNode::Sel:
      for (const MirrorNode& c : n.children) {
        const TickStatus s = ref_tick(c, visits);
        if (s != TickStatus::Failure) return s;
      }
      return TickStatus::Failure;
    case MirrorNode::Par: {
      bool fail = false, run = false;
      for (const MirrorNode& c : n.children) {
        const TickStatus s = ref_tick(c, visits);
        fail = fail || s == TickStatus::Failure;
        run = run || s == TickStatus::Running;
      }
      if (fail) return TickStatus::Failure;
      if (run) return TickStatus::Running;
      return TickStatus::Success;
    }
    case MirrorNode::DecoFwd:
      return ref_tick(n.children[0], visits);
    case MirrorNode::DecoInv: {
      const TickStatus s = ref_tick(n.children[0], visits);
      if (s == TickStatus::Success) return TickStatus::Failure;
      if (s == TickStatus::Failure) return TickStatus::Success;
      return TickStatus::Running;
    }
    case MirrorNode::Cond:
      visits.push_back(n.id);
      return n.code == 0 ? TickStatus::Success : TickStatus::Failure;
    case MirrorNode::Act:
      visits.push_back(n.id);
      if (n.code == 0) return TickStatus::Success;
      if (n.code == 1) return TickStatus::Failure;
      return TickStatus::Running;
  }
  return TickStatus::Failure;
}

struct FuzzTree {
  BtNodePtr tree;
  MirrorNode mirror;
  int leaves = 0;
};

// Random tree with bounded depth and branching; labels carry a prefix so two
// generated trees never share labels and splicing between them stays valid.
inline FuzzTree make_fuzz_tree(Rng& rng, const std::string& prefix,
                               int max_depth = 4) {
  register_fuzz_primitives();
  int counter = 0;
  int leaf_ids = 0;

  struct Builder {
    Rng& rng;
    const std::string& prefix;
    int& counter;
    int& leaf_ids;
    int max_depth;

    std::pair<BtNodePtr, MirrorNode> leaf() {
      const int id = leaf_ids++;
      const std::string label = prefix + std::to_string(counter++);
      MirrorNode m;
      m.id = id;
      if (rng.uniform_index(2) == 0) {
        m.kind = MirrorNode::Cond;
        m.code = static_cast<int>(rng.uniform_index(2));
        auto node = make_condition(
            label, "fuzz-cond",
            {fixed_param("id", SlotRole::Threshold, id),
             fixed_param("ok", SlotRole::Threshold, m.code == 0 ? 1.0 : 0.0)});
        return {node, m};
      }
      m.kind = MirrorNode::Act;
      m.code = static_cast<int>(rng.uniform_index(3));
      auto node = make_action(label, "fuzz-act",
                              {fixed_param("id", SlotRole::SkillParam, id),
                               fixed_param("code", SlotRole::SkillParam,
                                           m.code)});
      return {node, m};
    }

    std::pair<BtNodePtr, MirrorNode> build(int depth) {
      if (depth >= max_depth || rng.uniform_index(3) == 0) return leaf();
      const std::string label = prefix + std::to_string(counter++);
      const int pick = static_cast<int>(rng.uniform_index(4));
      if (pick == 3) {
        auto [child, m_child] = build(depth + 1);
        const bool invert = rng.uniform_index(2) == 1;
        MirrorNode m;
        m.kind = invert ? MirrorNode::DecoInv : MirrorNode::DecoFwd;
        m.children.push_back(std::move(m_child));
        return {make_decorator(label,
                               invert ? DecoratorOp::Invert
                                      : DecoratorOp::Forward,
                               child),
                m};
      }
      const int n_children = 1 + static_cast<int>(rng.uniform_index(4));
      std::vector<BtNodePtr> children;
      MirrorNode m;
      m.kind = pick == 0   ? MirrorNode::Seq
               : pick == 1 ? MirrorNode::Sel
                           : MirrorNode::Par;
      for (int i = 0; i < n_children; ++i) {
        auto [c, mc] = build(depth + 1);
        children.push_back(std::move(c));
        m.children.push_back(std::move(mc));
      }
      BtNodePtr node = pick == 0   ? make_sequence(label, std::move(children))
                       : pick == 1 ? make_selector(label, std::move(children))
                                   : make_parallel(label, std::move(children));
      return {node, m};
    }
  } builder{rng, prefix, counter, leaf_ids, max_depth};

  auto [tree, mirror] = builder.build(0);
  return {tree, std::move(mirror), leaf_ids};
}

// One property pass over a generated tree: production tick matches the
// reference interpreter in status and visit order, ticking is repeatable,
// JSON round-trips hash-stable, and splicing a foreign subtree in and the
// original leaf back restores the original hash.
inline bool fuzz_tree_properties(Rng& rng) {
  const FuzzTree a = make_fuzz_tree(rng, "a");

  Blackboard bb;
  fuzz_visits().clear();
  const TickStatus got = tick(a.tree, bb, {});
  const std::vector<int> got_visits = fuzz_visits();

  std::vector<int> want_visits;
  const TickStatus want = ref_tick(a.mirror, want_visits);
  if (got != want || got_visits != want_visits) return false;

  fuzz_visits().clear();
  if (tick(a.tree, bb, {}) != want || fuzz_visits() != want_visits)
    return false;

  const std::string h = tree_hash(*a.tree);
  if (tree_hash(*tree_from_json_text(tree_to_json(*a.tree).dump())) != h)
    return false;

  // Splice round trip through a random label of a freshly generated guest.
  const FuzzTree b = make_fuzz_tree(rng, "b", 2);
  BtNodePtr target = a.tree;
  while (!target->children.empty()) {
    target =
        target->children[rng.uniform_index(target->children.size())];
  }
  const std::string slot = target->label;
  const BtNodePtr swapped = splice(a.tree, slot, b.tree);
  if (tree_hash(*swapped) == h) return false;
  const BtNodePtr restored = splice(swapped, b.tree->label, target);
  return tree_hash(*restored) == h;
}

}  // namespace btlab::testsupport
