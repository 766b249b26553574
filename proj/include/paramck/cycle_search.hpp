#pragma once

// FSM/FSM decision procedure: for each reachable accepting abstract
// configuration, ask whether some abstract cycle through it has zero net
// population change, and turn a positive answer into a replayable witness.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abstraction.hpp"
#include "explicit_engine.hpp"
#include "linear.hpp"
#include "machines.hpp"
#include "parikh.hpp"

namespace paramck {

struct SymbolicOptions {
  std::size_t abstract_budget = 5'000'000;
  SolverOptions solver;
  /// Cap on the PDM/PDM restricted contributor's state count.
  std::size_t restriction_budget = 200'000;
  /// Called with every candidate system before it is solved.
  std::function<void(const LinearSystem&)> on_system;
};

/// Abstract configurations sharing the contributor set of `configs[0]`,
/// reachable from it; as an automaton with configs[0] initial and final.
/// Letters are network transition ids.
struct CycleFsa {
  std::vector<AbstractConfig> configs;
  Fsa fsa;
};

inline CycleFsa build_cycle_fsa(const Network& net, const AbstractConfig& a) {
  CycleFsa c;
  std::map<AbstractConfig, int> index{{a, 0}};
  c.configs.push_back(a);
  c.fsa.letters = static_cast<int>(net.transition_total());
  c.fsa.initial = 0;
  for (std::size_t cur = 0; cur < c.configs.size(); ++cur) {
    for (auto& [t, next] : abstract_successors(net, c.configs[cur])) {
      if (next.q != a.q) continue;
      auto [it, fresh] = index.emplace(next, static_cast<int>(c.configs.size()));
      if (fresh) c.configs.push_back(std::move(next));
      c.fsa.edges.push_back({static_cast<int>(cur), net.id(t), it->second});
    }
  }
  c.fsa.states = static_cast<int>(c.configs.size());
  c.fsa.final.assign(c.configs.size(), false);
  c.fsa.final[0] = true;
  return c;
}

/// Adds contributor flow balance and a nonempty word to a Parikh system
/// whose letter i is network transition id i.
inline void add_realizability(const Network& net, ParikhSystem& ps) {
  const std::size_t nc = state_count(net.contributor);
  std::vector<LinearExpr> in(nc), out(nc);
  LinearExpr total;
  for (std::size_t id = 0; id < net.transition_total(); ++id) {
    const int x = ps.letter_vars[id];
    total.add(x);
    const auto t = net.transition(static_cast<int>(id));
    if (t.owner == Role::leader) continue;
    in[static_cast<std::size_t>(target_of(net.contributor, t.index))].add(x);
    out[static_cast<std::size_t>(source_of(net.contributor, t.index))].add(x);
  }
  for (std::size_t q = 0; q < nc; ++q) ps.system.require(Constraint::eq(in[q], out[q]));
  ps.system.require(Constraint::ge(total, LinearExpr(1)));
}

/// Parikh image of the cycle automaton, contributor flow balance, and at
/// least one transition.
inline ParikhSystem realizability_system(const Network& net, const CycleFsa& c) {
  auto ps = parikh_fsa(c.fsa);
  add_realizability(net, ps);
  return ps;
}

namespace detail {

inline bool returns_to_initial(const Fsa& f) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(f.states));
  for (const auto& e : f.edges) adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
  std::vector<bool> seen(adj.size(), false);
  std::vector<int> work{f.initial};
  while (!work.empty()) {
    const int v = work.back();
    work.pop_back();
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (w == f.initial) return true;
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        work.push_back(w);
      }
    }
  }
  return false;
}

inline int contributor_count(const std::vector<std::int64_t>& demand, int initial) {
  const auto k = std::max<std::int64_t>(demand[static_cast<std::size_t>(initial)], 1);
  if (k > 1'000'000) throw BudgetExceeded("concretization needs more than 10^6 contributors");
  return static_cast<int>(k);
}

struct ExpandedStem {
  int k = 1;
  std::vector<PlannedStep> steps;
};

/// Expands an abstract stem so that it ends with at least demand[q]
/// contributors on every state q: walking backward, a contributor move
/// src -> tgt is repeated until it covers the demand at tgt, which then
/// moves to src.
inline ExpandedStem expand_stem(const Network& net, const std::vector<Transition>& stem,
                                std::vector<std::int64_t> d) {
  std::vector<PlannedStep> planned_rev;
  for (auto it = stem.rbegin(); it != stem.rend(); ++it) {
    const Transition t = *it;
    if (t.owner == Role::leader) {
      planned_rev.push_back({t, {}});
      continue;
    }
    const auto src = static_cast<std::size_t>(source_of(net.contributor, t.index));
    const auto tgt = static_cast<std::size_t>(target_of(net.contributor, t.index));
    std::int64_t times = 1;
    if (src == tgt) {
      d[src] = std::max<std::int64_t>(d[src], 1);
    } else {
      times = std::max<std::int64_t>(d[tgt], 1);
      d[tgt] = 0;
      d[src] += times;
    }
    if (times > 1'000'000) throw BudgetExceeded("concretization needs more than 10^6 contributors");
    for (std::int64_t i = 0; i < times; ++i)
      planned_rev.push_back({t, {static_cast<int>(src), {}}});
  }
  return {contributor_count(d, initial_state(net.contributor)),
          std::vector<PlannedStep>(planned_rev.rbegin(), planned_rev.rend())};
}

/// Concrete lasso from an abstract stem and a cycle whose contributor flow
/// is balanced. The cycle needs `tokens` contributors on every state of
/// `cycle_q`.
inline std::optional<Witness> lasso_with_demand(const Network& net, const std::vector<Transition>& stem,
                                                const std::vector<Transition>& cycle,
                                                const StateSet& cycle_q, std::int64_t tokens,
                                                std::optional<Pivot> pivot) {
  std::vector<std::int64_t> d(state_count(net.contributor), 0);
  for (int q : cycle_q.members()) d[static_cast<std::size_t>(q)] = tokens;
  const auto [k, planned_stem] = expand_stem(net, stem, std::move(d));
  std::vector<PlannedStep> planned_cycle;
  for (const auto& t : cycle)
    planned_cycle.push_back(
        {t, t.owner == Role::leader ? LocalConfig{} : LocalConfig{source_of(net.contributor, t.index), {}}});
  Witness w;
  try {
    w = assign_actors(net, k, planned_stem, planned_cycle, pivot);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!replay(net, w)) return std::nullopt;
  return w;
}

/// Demand analysis with up to three doublings of the per-state demand.
inline Witness concretize_lasso(const Network& net, const std::vector<Transition>& stem,
                                const std::vector<Transition>& cycle, const StateSet& cycle_q,
                                std::optional<Pivot> pivot = std::nullopt) {
  if (is_pdm(net.contributor)) throw Error("concretization expects a finite-state contributor");
  auto tokens = static_cast<std::int64_t>(cycle.size());
  for (int attempt = 0; attempt < 4; ++attempt, tokens *= 2)
    if (auto w = lasso_with_demand(net, stem, cycle, cycle_q, tokens, pivot)) return *w;
  throw Error("internal error: concretized lasso does not replay");
}

}  // namespace detail

/// Witness from a feasible realizability solution at `c.configs[0]`, reached
/// by the abstract path `stem`.
inline Witness concretize(const Network& net, const CycleFsa& c, const ParikhSystem& ps,
                          const std::vector<Transition>& stem, const Assignment& solution) {
  const auto word = euler_witness(c.fsa, ps, solution);
  std::vector<Transition> cycle;
  for (int id : word) cycle.push_back(net.transition(id));
  return detail::concretize_lasso(net, stem, cycle, c.configs[0].q);
}

/// Büchi emptiness for a finite-state leader (already producted with the
/// property) and a finite-state contributor, for any number of contributors.
inline CheckResult check_fsm_fsm(const Network& net, const SymbolicOptions& opts = {}) {
  if (is_pdm(net.leader) || is_pdm(net.contributor))
    throw Error("fsm-fsm mode needs finite-state leader and contributor");
  CheckResult res;
  try {
    const auto graph = reachable_abstract(net, opts.abstract_budget);
    res.stats.abstract_configs = graph.configs.size();
    for (std::size_t i = 0; i < graph.configs.size(); ++i) {
      const auto& a = graph.configs[i];
      if (!accepts(net.leader, a.leader)) continue;
      const auto c = build_cycle_fsa(net, a);
      if (!detail::returns_to_initial(c.fsa)) continue;
      ++res.stats.candidates;
      const auto ps = realizability_system(net, c);
      if (opts.on_system) opts.on_system(ps.system);
      SolverStats ss;
      const auto sol = solve(ps.system, opts.solver, &ss);
      res.stats.lp_solves += ss.lp_solves;
      res.stats.splits += ss.splits;
      if (!sol) continue;
      res.verdict = Verdict::nonempty;
      res.witness = concretize(net, c, ps, graph.stem_to(static_cast<int>(i)), *sol);
      res.stats.contributors = res.witness->k;
      return res;
    }
    res.verdict = Verdict::empty;
  } catch (const BudgetExceeded& e) {
    res.verdict = Verdict::budget;
    res.note = e.what();
  }
  return res;
}

}  // namespace paramck
