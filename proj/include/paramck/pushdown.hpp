#pragma once

// Pushdown leaders: post* saturation, the abstract pushdown system over
// abstract configurations, loop automata for a pivot (state, top symbol),
// their grammars, and the PDM/FSM decision procedure.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "abstraction.hpp"
#include "cycle_search.hpp"
#include "explicit_engine.hpp"
#include "linear.hpp"
#include "machines.hpp"
#include "parikh.hpp"

namespace paramck {

/// Pushdown rule in normal form: control `src` with `top` on the stack
/// moves to `dst` and replaces `top` by `push` (top first, 0 to 2 symbols).
struct PdsRule {
  int src = 0;
  int top = 0;
  int dst = 0;
  std::vector<int> push;
  int label = 0;
};

/// Normal-form rules of a pushdown machine, ignoring the store.
inline std::vector<PdsRule> pds_rules(const Pdm& p) {
  std::vector<PdsRule> out;
  for (std::size_t i = 0; i < p.rules.size(); ++i) {
    const auto& r = p.rules[i];
    if (r.op == StackOp::pop) {
      if (r.top == Pdm::kBottom) continue;
      out.push_back({r.src, r.top, r.dst, {}, static_cast<int>(i)});
    } else {
      out.push_back({r.src, r.top, r.dst, {r.pushed, r.top}, static_cast<int>(i)});
    }
  }
  return out;
}

/// A fixed rule list indexed by (control, top).
class PdsRuleTable {
 public:
  explicit PdsRuleTable(std::vector<PdsRule> rules) {
    for (auto& r : rules) table_[{r.src, r.top}].push_back(std::move(r));
  }
  const std::vector<PdsRule>& rules(int control, int top) {
    auto it = table_.find({control, top});
    return it == table_.end() ? empty_ : it->second;
  }

 private:
  std::map<std::pair<int, int>, std::vector<PdsRule>> table_;
  std::vector<PdsRule> empty_;
};

// ---------------------------------------------------------------------------
// post*

/// Automaton over stack symbols recognising reachable configurations.
/// Control states are the non-negative ids; -1 is the final state and
/// -2 - i the i-th intermediate state. Symbol kEpsilon labels
/// epsilon-transitions.
struct SaturationAutomaton {
  static constexpr int kEpsilon = -1;
  static constexpr int kFinal = -1;

  std::vector<std::tuple<int, int, int>> transitions;  // (from, symbol, to) in discovery order
  std::set<std::tuple<int, int, int>> rel;
  std::map<std::pair<int, int>, int> mid;

  /// Accepts control `c` with stack `w` (top first).
  bool accepts(int c, const std::vector<int>& w) const {
    std::set<int> cur{c};
    auto close = [&](std::set<int> s) {
      std::vector<int> work(s.begin(), s.end());
      while (!work.empty()) {
        const int x = work.back();
        work.pop_back();
        for (auto it = rel.lower_bound({x, kEpsilon, std::numeric_limits<int>::min()});
             it != rel.end() && std::get<0>(*it) == x && std::get<1>(*it) == kEpsilon; ++it)
          if (s.insert(std::get<2>(*it)).second) work.push_back(std::get<2>(*it));
      }
      return s;
    };
    cur = close(cur);
    for (int sym : w) {
      std::set<int> next;
      for (int x : cur)
        for (auto it = rel.lower_bound({x, sym, std::numeric_limits<int>::min()});
             it != rel.end() && std::get<0>(*it) == x && std::get<1>(*it) == sym; ++it)
          next.insert(std::get<2>(*it));
      cur = close(std::move(next));
    }
    return cur.count(kFinal) > 0;
  }
};

/// Schwoon's post* from the configuration (c0, [bottom]). `src.rules(c, top)`
/// may discover new controls. Throws BudgetExceeded past `budget`
/// automaton transitions.
template <class RuleSource>
SaturationAutomaton post_star(RuleSource& src, int c0, int bottom, std::size_t budget = 5'000'000) {
  using T = std::tuple<int, int, int>;
  constexpr int eps = SaturationAutomaton::kEpsilon;
  SaturationAutomaton a;
  std::deque<T> work{T{c0, bottom, SaturationAutomaton::kFinal}};
  auto add_rel = [&](const T& t) {
    if (!a.rel.insert(t).second) return false;
    a.transitions.push_back(t);
    if (a.rel.size() > budget) throw BudgetExceeded("post* budget exceeded");
    return true;
  };
  auto mid_state = [&](int c, int g) {
    auto [it, fresh] = a.mid.emplace(std::make_pair(c, g), -2 - static_cast<int>(a.mid.size()));
    return it->second;
  };
  // Outgoing relation transitions per source state, for epsilon combination
  // and for mid-state lookups.
  std::map<int, std::vector<std::pair<int, int>>> out;
  std::map<int, std::vector<int>> eps_into;  // mid state -> controls with (c, eps, mid)

  while (!work.empty()) {
    const T t = work.front();
    work.pop_front();
    if (!add_rel(t)) continue;
    const auto [p, g, q] = t;
    out[p].emplace_back(g, q);
    if (g != eps) {
      for (const auto& r : src.rules(p, g)) {
        if (r.push.empty()) {
          work.emplace_back(r.dst, eps, q);
        } else if (r.push.size() == 1) {
          work.emplace_back(r.dst, r.push[0], q);
        } else {
          const int m = mid_state(r.dst, r.push[0]);
          work.emplace_back(r.dst, r.push[0], m);
          const T inner(m, r.push[1], q);
          if (add_rel(inner)) {
            out[m].emplace_back(r.push[1], q);
            for (int c : eps_into[m]) work.emplace_back(c, r.push[1], q);
          }
        }
      }
    } else {
      if (q < SaturationAutomaton::kFinal) eps_into[q].push_back(p);
      const auto outs = out[q];
      for (auto [g2, q2] : outs) work.emplace_back(p, g2, q2);
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Abstract pushdown system

/// Pushdown system whose controls are abstract configurations (leader
/// state, store, populated contributor states) and whose stack is the
/// leader's. Rule labels are network transition ids; contributor moves
/// keep the top symbol. Controls are interned as they are discovered.
class AbstractPdm {
 public:
  explicit AbstractPdm(const Network& net) : net_(&net) {
    if (!is_pdm(net.leader)) throw Error("abstract pushdown system needs a pushdown leader");
    intern(initial_abstract(net));
  }

  const Network& network() const { return *net_; }
  int initial() const { return 0; }
  std::size_t control_count() const { return controls_.size(); }
  const AbstractConfig& control(int id) const { return controls_.at(static_cast<std::size_t>(id)); }
  bool accepting(int id) const { return accepts(net_->leader, control(id).leader); }
  int symbols() const { return static_cast<int>(std::get<Pdm>(net_->leader).stack_symbols.size()); }

  const std::vector<PdsRule>& rules(int c, int top) {
    auto [it, fresh] = cache_.try_emplace({c, top});
    if (!fresh) return it->second;
    std::vector<PdsRule> out;
    const AbstractConfig a = control(c);
    const auto& leader = std::get<Pdm>(net_->leader);
    for (std::size_t i = 0; i < leader.rules.size(); ++i) {
      const auto& r = leader.rules[i];
      if (r.src != a.leader || r.top != top || !enabled(r.action, a.store)) continue;
      if (r.op == StackOp::pop && r.top == Pdm::kBottom) continue;
      const int dst = intern({r.dst, store_after(r.action, a.store), a.q});
      std::vector<int> push;
      if (r.op == StackOp::push) push = {r.pushed, r.top};
      out.push_back({c, top, dst, std::move(push), net_->id({Role::leader, static_cast<int>(i)})});
    }
    for_each_abstract_contributor_move(*net_, a.store, a.q, [&](int idx, Value g, StateSet q) {
      const int dst = intern({a.leader, g, std::move(q)});
      out.push_back({c, top, dst, {top}, net_->id({Role::contributor, idx})});
    });
    auto& slot = cache_[{c, top}];
    slot = std::move(out);
    return slot;
  }

 private:
  int intern(AbstractConfig a) {
    auto [it, fresh] = ids_.emplace(a, static_cast<int>(controls_.size()));
    if (fresh) controls_.push_back(std::move(a));
    return it->second;
  }

  const Network* net_;
  std::deque<AbstractConfig> controls_;
  std::map<AbstractConfig, int> ids_;
  std::map<std::pair<int, int>, std::vector<PdsRule>> cache_;
};

// ---------------------------------------------------------------------------
// Loop automata and grammars

/// Pushdown automaton over letters 0..letters-1 starting in (initial,
/// [start_symbol]) and accepting in control `target` with `target_symbol`
/// on top. The start symbol is never popped.
struct Pda {
  int controls = 0;
  int symbols = 0;
  int letters = 0;
  std::vector<PdsRule> rules;
  int initial = 0;
  int start_symbol = 0;
  int target = 0;
  int target_symbol = 0;
};

/// Loop controls: (abstract control, seen-accepting bit).
struct LoopPda {
  Pda pda;
  std::vector<std::pair<int, bool>> controls;
};

/// Nonempty runs from pivot control `p` with `gamma` on top back to `p`
/// with `gamma` on top that enter an accepting control, restricted to
/// controls with the contributor set of `p`. The bit records entering an
/// accepting control; the final step enters `p`, so an accepting `p`
/// suffices for nonempty runs.
inline LoopPda build_loop_pda(AbstractPdm& apdm, int p, int gamma) {
  LoopPda out;
  const StateSet q = apdm.control(p).q;
  std::map<std::pair<int, bool>, int> ids;
  auto intern = [&](int c, bool bit) {
    auto [it, fresh] = ids.emplace(std::make_pair(c, bit), static_cast<int>(out.controls.size()));
    if (fresh) out.controls.emplace_back(c, bit);
    return it->second;
  };
  out.pda.initial = intern(p, false);
  for (std::size_t i = 0; i < out.controls.size(); ++i) {
    const auto [c, bit] = out.controls[i];
    for (int x = 0; x < apdm.symbols(); ++x) {
      const auto rules = apdm.rules(c, x);
      for (const auto& r : rules) {
        if (apdm.control(r.dst).q != q) continue;
        const int dst = intern(r.dst, bit || apdm.accepting(r.dst));
        out.pda.rules.push_back({static_cast<int>(i), x, dst, r.push, r.label});
      }
    }
  }
  out.pda.controls = static_cast<int>(out.controls.size());
  out.pda.symbols = apdm.symbols();
  out.pda.letters = static_cast<int>(apdm.network().transition_total());
  out.pda.start_symbol = gamma;
  out.pda.target_symbol = gamma;
  auto t = ids.find({p, true});
  out.pda.target = t == ids.end() ? -1 : t->second;
  return out;
}

/// Grammar with L(grammar) = L(pda). Nonterminals T[x,X,y] derive runs from
/// x with X on top to y with X popped; R[x,X] derives runs from x with X
/// on top that reach the target without popping X. Only productive
/// T-symbols are generated.
inline Grammar pda_to_cfg(const Pda& pda) {
  const int m = pda.controls;
  const int s = pda.symbols;
  auto tid = [&](int x, int X, int y) { return (static_cast<std::size_t>(x) * s + X) * m + y; };
  std::vector<char> prod(static_cast<std::size_t>(m) * s * m, 0);
  std::map<std::pair<int, int>, std::vector<const PdsRule*>> by_src;
  for (const auto& r : pda.rules) by_src[{r.src, r.top}].push_back(&r);

  for (bool changed = true; changed;) {
    changed = false;
    auto mark = [&](std::size_t i) {
      if (!prod[i]) prod[i] = 1, changed = true;
    };
    for (const auto& r : pda.rules) {
      if (r.push.empty()) {
        mark(tid(r.src, r.top, r.dst));
      } else if (r.push.size() == 1) {
        for (int y = 0; y < m; ++y)
          if (prod[tid(r.dst, r.push[0], y)]) mark(tid(r.src, r.top, y));
      } else {
        for (int z = 0; z < m; ++z) {
          if (!prod[tid(r.dst, r.push[0], z)]) continue;
          for (int y = 0; y < m; ++y)
            if (prod[tid(z, r.push[1], y)]) mark(tid(r.src, r.top, y));
        }
      }
    }
  }

  Grammar g;
  g.terminals = pda.letters;
  std::map<std::tuple<char, int, int, int>, int> names;
  std::deque<std::tuple<char, int, int, int>> work;
  auto nt = [&](char kind, int x, int X, int y) {
    auto key = std::make_tuple(kind, x, X, y);
    auto [it, fresh] = names.emplace(key, g.nonterminals);
    if (fresh) {
      ++g.nonterminals;
      work.push_back(key);
    }
    return Symbol{false, it->second};
  };
  g.start = nt('R', pda.initial, pda.start_symbol, 0).id;
  if (m == 0) return g;

  while (!work.empty()) {
    const auto [kind, x, X, y] = work.front();
    work.pop_front();
    const int lhs = names.at({kind, x, X, y});
    auto it = by_src.find({x, X});
    if (kind == 'R' && x == pda.target && X == pda.target_symbol) g.productions.push_back({lhs, {}});
    if (it == by_src.end()) continue;
    for (const PdsRule* r : it->second) {
      const Symbol a{true, r->label};
      if (kind == 'T') {
        if (r->push.empty()) {
          if (r->dst == y) g.productions.push_back({lhs, {a}});
        } else if (r->push.size() == 1) {
          if (prod[tid(r->dst, r->push[0], y)]) g.productions.push_back({lhs, {a, nt('T', r->dst, r->push[0], y)}});
        } else {
          for (int z = 0; z < m; ++z)
            if (prod[tid(r->dst, r->push[0], z)] && prod[tid(z, r->push[1], y)])
              g.productions.push_back({lhs, {a, nt('T', r->dst, r->push[0], z), nt('T', z, r->push[1], y)}});
        }
      } else {
        if (r->push.empty()) continue;
        if (r->push.size() == 1) {
          g.productions.push_back({lhs, {a, nt('R', r->dst, r->push[0], 0)}});
        } else {
          g.productions.push_back({lhs, {a, nt('R', r->dst, r->push[0], 0)}});
          for (int z = 0; z < m; ++z)
            if (prod[tid(r->dst, r->push[0], z)])
              g.productions.push_back({lhs, {a, nt('T', r->dst, r->push[0], z), nt('R', z, r->push[1], 0)}});
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// PDM/FSM

namespace detail {

/// Shortest abstract run from the initial configuration to control `p`
/// with `gamma` on top, by breadth-first search.
inline std::vector<Transition> pds_stem(AbstractPdm& apdm, int p, int gamma, std::size_t budget) {
  using Config = std::pair<int, std::vector<int>>;  // control, stack bottom first
  std::map<Config, int> seen;
  std::vector<Config> configs{{apdm.initial(), {Pdm::kBottom}}};
  std::vector<std::pair<int, int>> parent{{-1, -1}};
  seen.emplace(configs[0], 0);
  for (std::size_t cur = 0; cur < configs.size(); ++cur) {
    const auto c = configs[cur];
    if (c.first == p && c.second.back() == gamma) {
      std::vector<Transition> out;
      for (int v = static_cast<int>(cur); parent[static_cast<std::size_t>(v)].first >= 0;
           v = parent[static_cast<std::size_t>(v)].first)
        out.push_back(apdm.network().transition(parent[static_cast<std::size_t>(v)].second));
      std::reverse(out.begin(), out.end());
      return out;
    }
    const auto rules = apdm.rules(c.first, c.second.back());
    for (const auto& r : rules) {
      Config next{r.dst, c.second};
      next.second.pop_back();
      for (auto it = r.push.rbegin(); it != r.push.rend(); ++it) next.second.push_back(*it);
      if (next.second.empty()) continue;
      if (seen.emplace(next, static_cast<int>(configs.size())).second) {
        if (configs.size() >= budget) throw BudgetExceeded("stem search budget exceeded");
        configs.push_back(std::move(next));
        parent.emplace_back(static_cast<int>(cur), r.label);
      }
    }
  }
  throw Error("internal error: post* reported an unreachable pivot");
}

}  // namespace detail

/// Büchi emptiness for a pushdown leader (already producted with the
/// property) and a finite-state contributor.
inline CheckResult check_pdm_fsm(const Network& net, const SymbolicOptions& opts = {}) {
  if (!is_pdm(net.leader) || is_pdm(net.contributor))
    throw Error("pdm-fsm mode needs a pushdown leader and a finite-state contributor");
  CheckResult res;
  try {
    AbstractPdm apdm(net);
    const auto sat = post_star(apdm, apdm.initial(), Pdm::kBottom, opts.abstract_budget);
    res.stats.abstract_configs = apdm.control_count();

    std::set<StateSet> accepting_q;
    for (std::size_t c = 0; c < apdm.control_count(); ++c)
      if (apdm.accepting(static_cast<int>(c))) accepting_q.insert(apdm.control(static_cast<int>(c)).q);

    std::set<std::pair<int, int>> tried;
    for (const auto& [p, g, q] : sat.transitions) {
      (void)q;
      if (p < 0 || g == SaturationAutomaton::kEpsilon || !tried.insert({p, g}).second) continue;
      if (!accepting_q.count(apdm.control(p).q)) continue;
      const auto loop = build_loop_pda(apdm, p, g);
      if (loop.pda.target < 0) continue;
      const auto grammar = pda_to_cfg(loop.pda);
      auto ps = parikh_cfg(grammar);
      if (ps.item_vars.empty()) continue;
      ++res.stats.candidates;
      add_realizability(net, ps);
      if (opts.on_system) opts.on_system(ps.system);
      SolverStats ss;
      const auto sol = solve(ps.system, opts.solver, &ss);
      res.stats.lp_solves += ss.lp_solves;
      res.stats.splits += ss.splits;
      if (!sol) continue;

      std::vector<std::int64_t> counts;
      for (int v : ps.item_vars) counts.push_back((*sol)[static_cast<std::size_t>(v)]);
      std::vector<Transition> cycle;
      for (int id : derive_word(grammar, counts)) cycle.push_back(net.transition(id));
      const auto stem = detail::pds_stem(apdm, p, g, opts.abstract_budget);
      res.verdict = Verdict::nonempty;
      res.witness = detail::concretize_lasso(net, stem, cycle, apdm.control(p).q,
                                             Pivot{apdm.control(p).leader, g});
      res.stats.contributors = res.witness->k;
      res.stats.abstract_configs = apdm.control_count();
      return res;
    }
    res.stats.abstract_configs = apdm.control_count();
    res.verdict = Verdict::empty;
  } catch (const BudgetExceeded& e) {
    res.verdict = Verdict::budget;
    res.note = e.what();
  }
  return res;
}

}  // namespace paramck
