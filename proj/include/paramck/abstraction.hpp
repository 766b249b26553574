#pragma once

// The abstract transition system: a configuration keeps the leader state,
// the store, and only the set of contributor states ever populated.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "explicit_engine.hpp"
#include "machines.hpp"

namespace paramck {

/// Set of contributor states as a bitset.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::size_t universe) : universe_(universe), words_((universe + 63) / 64, 0) {}

  std::size_t universe() const { return universe_; }
  bool contains(int q) const {
    const auto u = static_cast<std::size_t>(q);
    return u < universe_ && (words_[u / 64] >> (u % 64)) & 1u;
  }
  void insert(int q) {
    const auto u = static_cast<std::size_t>(q);
    words_.at(u / 64) |= std::uint64_t{1} << (u % 64);
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }
  bool subset_of(const StateSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_.at(i)) return false;
    return true;
  }
  std::vector<int> members() const {
    std::vector<int> out;
    for (std::size_t q = 0; q < universe_; ++q)
      if (contains(static_cast<int>(q))) out.push_back(static_cast<int>(q));
    return out;
  }

  friend auto operator<=>(const StateSet&, const StateSet&) = default;

 private:
  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

struct AbstractConfig {
  int leader = 0;
  Value store = kNoValue;
  StateSet q;

  friend auto operator<=>(const AbstractConfig&, const AbstractConfig&) = default;
};

inline std::string to_string(const AbstractConfig& a, const Network& net) {
  std::string s = "(" + state_names(net.leader)[static_cast<std::size_t>(a.leader)] + ", " +
                  net.values.name(a.store) + ", {";
  bool first = true;
  for (int q : a.q.members()) {
    if (!first) s += ",";
    first = false;
    s += state_names(net.contributor)[static_cast<std::size_t>(q)];
  }
  return s + "})";
}

/// Populated states of any population in `ps` (counts per state).
inline StateSet alpha(const std::vector<std::vector<std::int64_t>>& ps, std::size_t states) {
  StateSet out(states);
  for (const auto& p : ps)
    for (std::size_t q = 0; q < p.size(); ++q)
      if (p[q] > 0) out.insert(static_cast<int>(q));
  return out;
}

/// Membership in the concretization of `q`: zero outside q.
inline bool gamma(const StateSet& q, const std::vector<std::int64_t>& p) {
  for (std::size_t s = 0; s < p.size(); ++s)
    if (p[s] > 0 && !q.contains(static_cast<int>(s))) return false;
  return true;
}

inline AbstractConfig initial_abstract(const Network& net) {
  if (is_pdm(net.contributor)) throw Error("abstraction expects a finite-state contributor");
  StateSet q(state_count(net.contributor));
  q.insert(initial_state(net.contributor));
  return {initial_state(net.leader), kNoValue, q};
}

/// Contributor moves: the source must be populated, a read must match the
/// store; the target joins Q. Calls fn(transition index, store', Q').
template <class Fn>
void for_each_abstract_contributor_move(const Network& net, Value store, const StateSet& q, Fn&& fn) {
  const auto& c = std::get<Fsm>(net.contributor);
  for (std::size_t i = 0; i < c.transitions.size(); ++i) {
    const auto& t = c.transitions[i];
    if (!q.contains(t.src) || !enabled(t.action, store)) continue;
    StateSet next = q;
    next.insert(t.dst);
    fn(static_cast<int>(i), store_after(t.action, store), std::move(next));
  }
}

/// Abstract successors of a finite-state-leader configuration, leader moves
/// first, each group in transition order.
inline std::vector<std::pair<Transition, AbstractConfig>> abstract_successors(
    const Network& net, const AbstractConfig& a) {
  const auto* leader = std::get_if<Fsm>(&net.leader);
  if (!leader) throw Error("abstract_successors expects a finite-state leader");
  std::vector<std::pair<Transition, AbstractConfig>> out;
  for (std::size_t i = 0; i < leader->transitions.size(); ++i) {
    const auto& t = leader->transitions[i];
    if (t.src != a.leader || !enabled(t.action, a.store)) continue;
    out.push_back({{Role::leader, static_cast<int>(i)}, {t.dst, store_after(t.action, a.store), a.q}});
  }
  for_each_abstract_contributor_move(net, a.store, a.q, [&](int idx, Value g, StateSet q) {
    out.push_back({{Role::contributor, idx}, {a.leader, g, std::move(q)}});
  });
  return out;
}

/// Contributor population change of a transition (zero for the leader).
inline std::vector<int> delta(const Network& net, Transition t) {
  std::vector<int> d(state_count(net.contributor), 0);
  if (t.owner == Role::leader) return d;
  --d[static_cast<std::size_t>(source_of(net.contributor, t.index))];
  ++d[static_cast<std::size_t>(target_of(net.contributor, t.index))];
  return d;
}

/// Reachable part of the abstract system with one BFS predecessor per
/// configuration (first discovered, in successor order).
struct AbstractGraph {
  std::vector<AbstractConfig> configs;
  std::vector<int> parent;
  std::vector<Transition> parent_edge;
  std::map<AbstractConfig, int> index;

  /// Transitions of the stored path from the initial configuration to `v`.
  std::vector<Transition> stem_to(int v) const {
    std::vector<Transition> out;
    for (; parent[static_cast<std::size_t>(v)] >= 0; v = parent[static_cast<std::size_t>(v)])
      out.push_back(parent_edge[static_cast<std::size_t>(v)]);
    std::reverse(out.begin(), out.end());
    return out;
  }
};

inline AbstractGraph reachable_abstract(const Network& net, std::size_t budget = 5'000'000) {
  AbstractGraph g;
  auto init = initial_abstract(net);
  g.index.emplace(init, 0);
  g.configs.push_back(std::move(init));
  g.parent.push_back(-1);
  g.parent_edge.push_back({});
  for (std::size_t cur = 0; cur < g.configs.size(); ++cur) {
    for (auto& [t, next] : abstract_successors(net, g.configs[cur])) {
      if (g.index.count(next)) continue;
      if (g.configs.size() >= budget)
        throw BudgetExceeded("abstract state budget of " + std::to_string(budget) + " exceeded");
      g.index.emplace(next, static_cast<int>(g.configs.size()));
      g.configs.push_back(std::move(next));
      g.parent.push_back(static_cast<int>(cur));
      g.parent_edge.push_back(t);
    }
  }
  return g;
}

}  // namespace paramck
