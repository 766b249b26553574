#pragma once

// Concrete semantics for a fixed number of contributors: configurations,
// successors, Büchi emptiness by SCC decomposition, and witness replay.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "machines.hpp"

namespace paramck {

/// Leader local configuration, store, and the contributors as a sorted
/// multiset of local configurations (contributors are anonymous).
struct ConcreteConfig {
  LocalConfig leader;
  Value store = kNoValue;
  std::vector<LocalConfig> population;

  friend auto operator<=>(const ConcreteConfig&, const ConcreteConfig&) = default;
};

struct ConcreteConfigHash {
  std::size_t operator()(const ConcreteConfig& c) const noexcept {
    std::size_t h = 1469598103934665603ull;
    auto mix = [&h](std::size_t v) { h = (h ^ v) * 1099511628211ull; };
    auto local = [&](const LocalConfig& l) {
      mix(static_cast<std::size_t>(l.state));
      mix(l.stack.size());
      for (int s : l.stack) mix(static_cast<std::size_t>(s));
    };
    local(c.leader);
    mix(static_cast<std::size_t>(c.store + 1));
    for (const auto& p : c.population) local(p);
    return h;
  }
};

/// Per-state token counts of an FSM-contributor population.
inline std::vector<std::int64_t> counts(const std::vector<LocalConfig>& population,
                                        std::size_t states) {
  std::vector<std::int64_t> out(states, 0);
  for (const auto& l : population) ++out.at(static_cast<std::size_t>(l.state));
  return out;
}

struct Step {
  int actor = 0;  // 0 is the leader, 1..k the contributors
  Transition transition;

  friend bool operator==(const Step&, const Step&) = default;
};

/// Leader state and top-of-stack symbol at which a pushdown leader's cycle
/// starts and ends.
struct Pivot {
  int state = 0;
  int symbol = 0;

  friend bool operator==(const Pivot&, const Pivot&) = default;
};

struct Witness {
  int k = 1;
  std::vector<Step> stem;
  std::vector<Step> cycle;
  std::optional<Pivot> pivot;

  friend bool operator==(const Witness&, const Witness&) = default;
};

enum class Verdict : std::uint8_t { nonempty, empty, budget };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::nonempty: return "NONEMPTY";
    case Verdict::empty: return "EMPTY";
    case Verdict::budget: return "BUDGET";
  }
  return "?";
}

struct Stats {
  std::size_t concrete_configs = 0;
  std::size_t abstract_configs = 0;
  std::size_t candidates = 0;
  std::size_t lp_solves = 0;
  std::size_t splits = 0;
  std::size_t restriction_bound = 0;   // N, pushdown contributors only
  std::size_t restricted_states = 0;
  int contributors = 0;                // k of the deciding explicit run
};

struct CheckResult {
  Verdict verdict = Verdict::empty;
  std::optional<Witness> witness;
  Stats stats;
  std::string note;
};

inline ConcreteConfig initial_config(const Network& net, int k) {
  if (k < 1) throw Error("contributor count must be at least 1");
  ConcreteConfig c;
  c.leader = initial_local(net.leader);
  c.store = kNoValue;
  c.population.assign(static_cast<std::size_t>(k), initial_local(net.contributor));
  return c;
}

struct Move {
  Transition transition;
  LocalConfig source;  // the local configuration that moved
  ConcreteConfig next;
};

/// All TS moves from `c`, leader moves first, then contributor moves by
/// population entry and transition index. With a stack bound, moves that
/// would exceed it (leader or contributor stack, bottom included) are cut.
inline std::vector<Move> successors(const Network& net, const ConcreteConfig& c,
                                    std::optional<std::size_t> stack_bound = std::nullopt) {
  std::vector<Move> out;
  auto fits = [&](const LocalConfig& l) { return !stack_bound || l.stack.size() <= *stack_bound; };
  for_each_local_move(net.leader, c.leader, c.store, [&](int idx, LocalConfig next) {
    if (!fits(next)) return;
    ConcreteConfig n{std::move(next), store_after(action_of(net.leader, idx), c.store), c.population};
    out.push_back({{Role::leader, idx}, c.leader, std::move(n)});
  });
  for (std::size_t i = 0; i < c.population.size(); ++i) {
    if (i > 0 && c.population[i] == c.population[i - 1]) continue;
    const auto& src = c.population[i];
    for_each_local_move(net.contributor, src, c.store, [&](int idx, LocalConfig next) {
      if (!fits(next)) return;
      ConcreteConfig n{c.leader, store_after(action_of(net.contributor, idx), c.store), c.population};
      n.population[i] = std::move(next);
      std::sort(n.population.begin(), n.population.end());
      out.push_back({{Role::contributor, idx}, src, std::move(n)});
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayResult {
  bool valid = true;
  std::size_t step = 0;  // index into stem followed by cycle
  std::string reason;

  explicit operator bool() const { return valid; }
};

namespace detail {

inline ReplayResult replay_failure(std::size_t step, std::string reason) {
  return {false, step, std::move(reason)};
}

struct ActorState {
  LocalConfig leader;
  std::vector<LocalConfig> contributors;
  Value store = kNoValue;
};

// Applies one step. `fragment` replaces the leader stack during a pivoted
// cycle; its first symbol is the pivot and may not be popped.
inline std::optional<std::string> apply_step(const Network& net, ActorState& s, const Step& st,
                                             bool fragment) {
  const int k = static_cast<int>(s.contributors.size());
  if (st.actor < 0 || st.actor > k) return "actor index out of range";
  if ((st.actor == 0) != (st.transition.owner == Role::leader))
    return "actor does not own the transition";
  const auto& m = net.machine(st.transition.owner);
  if (st.transition.index < 0 ||
      static_cast<std::size_t>(st.transition.index) >= transition_count(m))
    return "unknown transition";
  const Action a = action_of(m, st.transition.index);
  if (!enabled(a, s.store)) return "read does not match the store";
  LocalConfig& local = st.actor == 0 ? s.leader : s.contributors[static_cast<std::size_t>(st.actor - 1)];
  if (fragment && st.actor == 0 && local.stack.size() == 1) {
    const auto& r = std::get<Pdm>(m).rules[static_cast<std::size_t>(st.transition.index)];
    if (r.op == StackOp::pop && r.src == local.state && r.top == local.stack.back())
      return "cycle pops the pivot symbol";
  }
  auto next = apply_local(m, local, st.transition.index);
  if (!next) return "transition not applicable to the actor's local configuration";
  local = std::move(*next);
  s.store = store_after(a, s.store);
  return std::nullopt;
}

inline std::vector<LocalConfig> sorted(std::vector<LocalConfig> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace detail

/// Checks that the stem applies from the initial configuration, that the
/// cycle applies after it, visits an accepting leader state, and closes:
/// identical configuration, or for a pivoted pushdown leader the pivot
/// state with the pivot symbol on top and the pivot never popped. Store and
/// population (as a multiset) must match in both cases.
inline ReplayResult replay(const Network& net, const Witness& w) {
  if (w.k < 1) return detail::replay_failure(0, "contributor count must be at least 1");
  if (w.cycle.empty()) return detail::replay_failure(w.stem.size(), "empty cycle");
  if (w.pivot && !is_pdm(net.leader))
    return detail::replay_failure(0, "pivot given for a finite-state leader");

  detail::ActorState s{initial_local(net.leader),
                       std::vector<LocalConfig>(static_cast<std::size_t>(w.k),
                                                initial_local(net.contributor)),
                       kNoValue};
  std::size_t idx = 0;
  for (const auto& st : w.stem) {
    if (auto err = detail::apply_step(net, s, st, false)) return detail::replay_failure(idx, *err);
    ++idx;
  }

  const auto start_store = s.store;
  const auto start_pop = detail::sorted(s.contributors);
  const auto start_leader = s.leader;
  if (w.pivot) {
    if (s.leader.state != w.pivot->state || s.leader.stack.empty() ||
        s.leader.stack.back() != w.pivot->symbol)
      return detail::replay_failure(idx, "stem does not end at the pivot");
    s.leader.stack = {w.pivot->symbol};
  }

  bool accepting = false;
  for (const auto& st : w.cycle) {
    if (auto err = detail::apply_step(net, s, st, w.pivot.has_value()))
      return detail::replay_failure(idx, *err);
    accepting = accepting || accepts(net.leader, s.leader.state);
    ++idx;
  }
  if (!accepting) return detail::replay_failure(idx, "cycle visits no accepting state");
  if (s.store != start_store) return detail::replay_failure(idx, "store differs after the cycle");
  if (detail::sorted(s.contributors) != start_pop)
    return detail::replay_failure(idx, "population differs after the cycle");
  if (w.pivot) {
    if (s.leader.state != w.pivot->state || s.leader.stack.back() != w.pivot->symbol)
      return detail::replay_failure(idx, "cycle does not return to the pivot");
  } else if (s.leader != start_leader) {
    return detail::replay_failure(idx, "leader differs after the cycle");
  }
  return {};
}

// ---------------------------------------------------------------------------
// Witness assembly

struct PlannedStep {
  Transition transition;
  LocalConfig source;
};

/// Turns a move sequence into actor steps: each contributor move is given to
/// the lowest-numbered contributor currently in the move's source.
inline Witness assign_actors(const Network& net, int k, const std::vector<PlannedStep>& stem,
                             const std::vector<PlannedStep>& cycle, std::optional<Pivot> pivot) {
  Witness w;
  w.k = k;
  w.pivot = pivot;
  std::vector<LocalConfig> actors(static_cast<std::size_t>(k), initial_local(net.contributor));
  auto convert = [&](const std::vector<PlannedStep>& in, std::vector<Step>& out) {
    for (const auto& p : in) {
      if (p.transition.owner == Role::leader) {
        out.push_back({0, p.transition});
        continue;
      }
      auto it = std::find(actors.begin(), actors.end(), p.source);
      if (it == actors.end()) throw Error("no contributor holds the source of a planned move");
      auto next = apply_local(net.contributor, *it, p.transition.index);
      if (!next) throw Error("planned move does not apply");
      *it = std::move(*next);
      out.push_back({static_cast<int>(it - actors.begin()) + 1, p.transition});
    }
  };
  convert(stem, w.stem);
  convert(cycle, w.cycle);
  return w;
}

// ---------------------------------------------------------------------------
// Explicit search

struct ExplicitOptions {
  /// Required for pushdown machines; bounds every stack (bottom included).
  std::optional<std::size_t> stack_bound;
  std::size_t state_budget = 5'000'000;
};

namespace detail {

struct Edge {
  int dst;
  PlannedStep step;
};

// Iterative Tarjan; returns the component id of every node.
inline std::vector<int> scc(const std::vector<std::vector<Edge>>& adj) {
  const std::size_t n = adj.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on(n, false);
  std::vector<int> stack;
  int counter = 0, comps = 0;
  std::vector<std::pair<int, std::size_t>> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.emplace_back(static_cast<int>(root), 0);
    while (!call.empty()) {
      auto& [v, i] = call.back();
      const auto uv = static_cast<std::size_t>(v);
      if (i == 0 && index[uv] < 0) {
        index[uv] = low[uv] = counter++;
        stack.push_back(v);
        on[uv] = true;
      }
      if (i < adj[uv].size()) {
        const int w = adj[uv][i++].dst;
        const auto uw = static_cast<std::size_t>(w);
        if (index[uw] < 0) {
          call.emplace_back(w, 0);
        } else if (on[uw]) {
          low[uv] = std::min(low[uv], index[uw]);
        }
        continue;
      }
      if (low[uv] == index[uv]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on[static_cast<std::size_t>(w)] = false;
          comp[static_cast<std::size_t>(w)] = comps;
        } while (w != v);
        ++comps;
      }
      const int done = v;
      call.pop_back();
      if (!call.empty()) {
        const auto up = static_cast<std::size_t>(call.back().first);
        low[up] = std::min(low[up], low[static_cast<std::size_t>(done)]);
      }
    }
  }
  return comp;
}

}  // namespace detail

/// Büchi emptiness of TS with k contributors. EMPTY with a pushdown machine
/// means empty within the stack bound.
inline CheckResult check_explicit(const Network& net, int k, const ExplicitOptions& opts = {}) {
  if ((is_pdm(net.leader) || is_pdm(net.contributor)) && !opts.stack_bound)
    throw Error("a stack bound is required for pushdown machines");
  CheckResult res;
  res.stats.contributors = k;

  std::vector<ConcreteConfig> configs;
  std::unordered_map<ConcreteConfig, int, ConcreteConfigHash> ids;
  std::vector<int> parent;
  std::vector<PlannedStep> parent_step;
  std::vector<std::vector<detail::Edge>> adj;

  configs.push_back(initial_config(net, k));
  ids.emplace(configs.front(), 0);
  parent.push_back(-1);
  parent_step.push_back({});
  for (std::size_t cur = 0; cur < configs.size(); ++cur) {
    adj.emplace_back();
    for (auto& mv : successors(net, configs[cur], opts.stack_bound)) {
      auto [it, fresh] = ids.emplace(mv.next, static_cast<int>(configs.size()));
      if (fresh) {
        if (configs.size() >= opts.state_budget) {
          res.verdict = Verdict::budget;
          res.stats.concrete_configs = configs.size();
          res.note = "state budget of " + std::to_string(opts.state_budget) + " configurations exceeded";
          return res;
        }
        configs.push_back(std::move(mv.next));
        parent.push_back(static_cast<int>(cur));
        parent_step.push_back({mv.transition, mv.source});
      }
      adj[cur].push_back({it->second, {mv.transition, std::move(mv.source)}});
    }
  }
  res.stats.concrete_configs = configs.size();

  const auto comp = detail::scc(adj);
  std::vector<int> comp_size(configs.size(), 0);
  for (int c : comp) ++comp_size[static_cast<std::size_t>(c)];
  int target = -1;
  for (std::size_t v = 0; v < configs.size() && target < 0; ++v) {
    if (!accepts(net.leader, configs[v].leader.state)) continue;
    const bool looped = comp_size[static_cast<std::size_t>(comp[v])] > 1 ||
                        std::any_of(adj[v].begin(), adj[v].end(),
                                    [&](const detail::Edge& e) { return e.dst == static_cast<int>(v); });
    if (looped) target = static_cast<int>(v);
  }
  if (target < 0) {
    res.verdict = Verdict::empty;
    return res;
  }

  std::vector<PlannedStep> stem;
  for (int v = target; parent[static_cast<std::size_t>(v)] >= 0; v = parent[static_cast<std::size_t>(v)])
    stem.push_back(parent_step[static_cast<std::size_t>(v)]);
  std::reverse(stem.begin(), stem.end());

  // Shortest cycle back to the target inside its component.
  const auto ut = static_cast<std::size_t>(target);
  std::vector<int> back(configs.size(), -2);
  std::vector<const detail::Edge*> via(configs.size(), nullptr);
  std::deque<int> work{target};
  back[ut] = -1;
  const detail::Edge* closing = nullptr;
  int closing_from = -1;
  while (!work.empty() && !closing) {
    const int v = work.front();
    work.pop_front();
    for (const auto& e : adj[static_cast<std::size_t>(v)]) {
      if (comp[static_cast<std::size_t>(e.dst)] != comp[ut]) continue;
      if (e.dst == target) {
        closing = &e;
        closing_from = v;
        break;
      }
      if (back[static_cast<std::size_t>(e.dst)] != -2) continue;
      back[static_cast<std::size_t>(e.dst)] = v;
      via[static_cast<std::size_t>(e.dst)] = &e;
      work.push_back(e.dst);
    }
  }
  std::vector<PlannedStep> cycle{closing->step};
  for (int v = closing_from; v != target; v = back[static_cast<std::size_t>(v)])
    cycle.push_back(via[static_cast<std::size_t>(v)]->step);
  std::reverse(cycle.begin(), cycle.end());

  std::optional<Pivot> pivot;
  if (is_pdm(net.leader)) {
    // Rotate to a lowest leader stack so the cycle never pops below it.
    std::vector<std::size_t> heights;
    LocalConfig l = configs[ut].leader;
    for (const auto& st : cycle) {
      heights.push_back(l.stack.size());
      if (st.transition.owner == Role::leader) l = *apply_local(net.leader, l, st.transition.index);
    }
    const auto r = static_cast<std::size_t>(
        std::min_element(heights.begin(), heights.end()) - heights.begin());
    l = configs[ut].leader;
    for (std::size_t i = 0; i < r; ++i)
      if (cycle[i].transition.owner == Role::leader)
        l = *apply_local(net.leader, l, cycle[i].transition.index);
    stem.insert(stem.end(), cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(r));
    std::rotate(cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(r), cycle.end());
    pivot = Pivot{l.state, l.stack.back()};
  }

  res.verdict = Verdict::nonempty;
  res.witness = assign_actors(net, k, stem, cycle, pivot);
  return res;
}

struct MonotoneResult {
  bool holds = true;
  Verdict at_k = Verdict::empty;
  Verdict at_next = Verdict::empty;
  std::string detail;
};

/// NONEMPTY at k must imply NONEMPTY at k + 1 (the extra contributor idles).
inline MonotoneResult monotone_check(const Network& net, int k, const ExplicitOptions& opts = {}) {
  if (is_pdm(net.leader)) throw Error("monotonicity check expects a finite-state leader");
  MonotoneResult r;
  r.at_k = check_explicit(net, k, opts).verdict;
  if (r.at_k != Verdict::nonempty) return r;
  r.at_next = check_explicit(net, k + 1, opts).verdict;
  if (r.at_next == Verdict::empty) {
    r.holds = false;
    r.detail = "NONEMPTY with " + std::to_string(k) + " contributors but EMPTY with " +
               std::to_string(k + 1);
  }
  return r;
}

}  // namespace paramck
