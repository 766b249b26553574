#pragma once

// Pushdown contributors: effective stack height, the k-restriction of a
// PDM, run distributions with their flattening split, and the PDM/PDM
// checker built on the bounded restriction.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cycle_search.hpp"
#include "explicit_engine.hpp"
#include "machines.hpp"
#include "pushdown.hpp"

namespace paramck {

// ---------------------------------------------------------------------------
// Runs

/// Rule indices applied from the initial configuration. With `lasso`, the
/// run is rules[0, stem) followed by rules[stem, stem + cycle) forever.
struct RunPrefix {
  Pdm machine;
  std::vector<int> rules;
  struct Lasso {
    std::size_t stem = 0;
    std::size_t cycle = 0;
  };
  std::optional<Lasso> lasso;
};

/// Configurations at positions 0..rules.size(). Throws Error naming the
/// first rule that does not apply.
inline std::vector<LocalConfig> configurations(const Pdm& m, const std::vector<int>& rules) {
  std::vector<LocalConfig> out{initial_local(m)};
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const int r = rules[i];
    if (r < 0 || static_cast<std::size_t>(r) >= m.rules.size())
      throw Error("run position " + std::to_string(i + 1) + ": no rule " + std::to_string(r));
    auto next = apply_local(m, out.back(), r);
    if (!next) throw Error("run position " + std::to_string(i + 1) + ": rule " + std::to_string(r) + " does not apply");
    out.push_back(std::move(*next));
  }
  return out;
}

namespace detail {

/// The lasso cycle can be repeated forever: it returns to its control state,
/// does not shrink the stack, and finds the same symbols above its lowest
/// point on every iteration.
inline bool repeatable(const std::vector<LocalConfig>& cs, std::size_t stem) {
  const auto& start = cs[stem];
  const auto& end = cs.back();
  if (start.state != end.state || end.stack.size() < start.stack.size()) return false;
  std::size_t low = start.stack.size();
  for (std::size_t i = stem; i < cs.size(); ++i) low = std::min(low, cs[i].stack.size());
  const std::size_t shift = end.stack.size() - start.stack.size();
  for (std::size_t l = low - 1; l < start.stack.size(); ++l)
    if (end.stack[l + shift] != start.stack[l]) return false;
  return true;
}

}  // namespace detail

/// Empty if the run is legal, otherwise the reason.
inline std::optional<std::string> run_error(const RunPrefix& run) {
  std::vector<LocalConfig> cs;
  try {
    cs = configurations(run.machine, run.rules);
  } catch (const Error& e) {
    return e.what();
  }
  if (run.lasso) {
    if (run.lasso->cycle == 0) return "lasso cycle is empty";
    if (run.lasso->stem + run.lasso->cycle != run.rules.size()) return "lasso lengths do not match the rules";
    if (!detail::repeatable(cs, run.lasso->stem)) return "lasso cycle cannot be repeated";
  }
  return std::nullopt;
}

/// The first `steps` rules of the run; lassos are unrolled.
inline std::vector<int> unroll(const RunPrefix& run, std::size_t steps) {
  if (!run.lasso) {
    if (steps > run.rules.size()) throw Error("position beyond the end of a finite run");
    return {run.rules.begin(), run.rules.begin() + static_cast<std::ptrdiff_t>(steps)};
  }
  std::vector<int> out;
  const auto [stem, cycle] = *run.lasso;
  for (std::size_t i = 0; i < steps; ++i)
    out.push_back(run.rules[i < stem ? i : stem + (i - stem) % cycle]);
  return out;
}

// ---------------------------------------------------------------------------
// Effective stack height

/// Effective stack heights of a finite sequence of configurations, with the
/// later-stack quantifier ranging over the sequence. Every symbol at or
/// below the lowest later height stays in place, so the dark suffix is one
/// shorter than that height.
inline std::vector<int> esh_profile(const std::vector<LocalConfig>& cs) {
  std::vector<int> out(cs.size());
  std::size_t low = SIZE_MAX;
  for (std::size_t i = cs.size(); i-- > 0;) {
    low = std::min(low, cs[i].stack.size());
    out[i] = static_cast<int>(cs[i].stack.size() - low + 1);
  }
  return out;
}

/// Effective stack heights of positions 0..positions-1. For a lasso, the
/// lowest later height is attained within one period after the stem, since
/// each period starts at least as high as the one before.
inline std::vector<int> esh_profile(const RunPrefix& run, std::size_t positions) {
  if (!run.lasso) {
    if (positions > run.rules.size() + 1) throw Error("position beyond the end of a finite run");
    auto p = esh_profile(configurations(run.machine, run.rules));
    p.resize(positions);
    return p;
  }
  if (auto e = run_error(run)) throw Error("invalid lasso: " + *e);
  const std::size_t horizon = std::max(positions, run.lasso->stem) + run.lasso->cycle;
  auto p = esh_profile(configurations(run.machine, unroll(run, horizon)));
  p.resize(positions);
  return p;
}

inline int effective_stack_height(const RunPrefix& run, std::size_t i) {
  if (!run.lasso && i > run.rules.size()) throw Error("position " + std::to_string(i) + " out of range");
  return esh_profile(run, i + 1).back();
}

// ---------------------------------------------------------------------------
// k-restriction

/// Finite-state machine tracking the control state and the top `k` stack
/// symbols. State `states[i]` is `windows[i]`; transition i simulates
/// rule `rule_of[i]`.
struct Restriction {
  Fsm fsm;
  std::vector<std::pair<int, std::vector<int>>> windows;  // (state, top first)
  std::vector<int> rule_of;
};

/// Pushes truncate the window to `k` symbols; pops need a second window
/// symbol. Runs whose effective stack height stays within `k` never pop
/// past the window. Only reachable windows are built.
inline Restriction restrict(const Pdm& p, int k, std::size_t budget = 200'000) {
  if (k < 1) throw Error("restriction bound must be at least 1");
  Restriction out;
  std::map<std::pair<int, std::vector<int>>, int> index;
  auto intern = [&](int q, std::vector<int> w) {
    auto [it, fresh] = index.emplace(std::make_pair(q, w), static_cast<int>(out.windows.size()));
    if (fresh) {
      if (out.windows.size() >= budget)
        throw BudgetExceeded("restriction to stack window " + std::to_string(k) + " exceeds " +
                             std::to_string(budget) + " states");
      out.windows.emplace_back(q, std::move(w));
    }
    return it->second;
  };
  out.fsm.initial = intern(p.initial, {Pdm::kBottom});
  for (std::size_t cur = 0; cur < out.windows.size(); ++cur) {
    for (std::size_t r = 0; r < p.rules.size(); ++r) {
      const auto& rule = p.rules[r];
      const auto [q, w] = out.windows[cur];
      if (rule.src != q || w.front() != rule.top) continue;
      std::vector<int> next;
      if (rule.op == StackOp::pop) {
        if (rule.top == Pdm::kBottom || w.size() < 2) continue;
        next.assign(w.begin() + 1, w.end());
      } else {
        next.push_back(rule.pushed);
        next.insert(next.end(), w.begin(), w.end());
        if (next.size() > static_cast<std::size_t>(k)) next.resize(static_cast<std::size_t>(k));
      }
      const int dst = intern(rule.dst, std::move(next));
      out.fsm.transitions.push_back({static_cast<int>(cur), rule.action, dst});
      out.rule_of.push_back(static_cast<int>(r));
    }
  }
  for (const auto& [q, w] : out.windows) {
    std::string name = p.states[static_cast<std::size_t>(q)] + "[";
    for (std::size_t i = 0; i < w.size(); ++i)
      name += (i ? "." : "") + p.stack_symbols[static_cast<std::size_t>(w[i])];
    out.fsm.states.push_back(name + "]");
  }
  if (p.accepting) {
    std::vector<bool> acc;
    for (const auto& [q, w] : out.windows) acc.push_back(p.accepts(q));
    out.fsm.accepting = std::move(acc);
  }
  return out;
}

struct AgreementResult {
  bool holds = true;
  std::vector<Action> counterexample;
  bool accepted_by_restriction = false;  // which side accepts the counterexample
};

/// Compares, over action words of length at most `max_len`, the words with
/// a run whose every position has effective stack height at most `k`
/// against the words labelling a path of the k-restriction.
inline AgreementResult kbounded_agreement(const Pdm& p, int k, std::size_t max_len,
                                          std::size_t budget = 5'000'000) {
  std::set<std::vector<Action>> bounded, restricted;
  std::size_t visited = 0;
  std::vector<LocalConfig> path{initial_local(p)};
  std::vector<Action> word;
  auto dfs = [&](auto&& self) -> void {
    if (++visited > budget) throw BudgetExceeded("bounded-run enumeration budget exceeded");
    const auto prof = esh_profile(path);
    if (*std::max_element(prof.begin(), prof.end()) <= k) bounded.insert(word);
    if (word.size() == max_len) return;
    for (std::size_t r = 0; r < p.rules.size(); ++r) {
      auto next = apply_local(p, path.back(), static_cast<int>(r));
      if (!next) continue;
      path.push_back(std::move(*next));
      word.push_back(p.rules[r].action);
      self(self);
      path.pop_back();
      word.pop_back();
    }
  };
  dfs(dfs);

  const auto res = restrict(p, k);
  std::set<std::pair<int, std::vector<Action>>> seen;
  std::deque<std::pair<int, std::vector<Action>>> work{{res.fsm.initial, {}}};
  while (!work.empty()) {
    auto [s, w] = std::move(work.front());
    work.pop_front();
    restricted.insert(w);
    if (w.size() == max_len) continue;
    for (const auto& t : res.fsm.transitions) {
      if (t.src != s) continue;
      auto w2 = w;
      w2.push_back(t.action);
      if (seen.emplace(t.dst, w2).second) work.emplace_back(t.dst, std::move(w2));
    }
  }

  AgreementResult out;
  for (const auto& w : bounded)
    if (!restricted.count(w)) {
      out = {false, w, false};
      break;
    }
  for (const auto& w : restricted)
    if (!bounded.count(w) && (out.holds || w < out.counterexample)) {
      out = {false, w, true};
      break;
    }
  return out;
}

/// Stack-window bound sufficient for replacing a pushdown contributor by
/// its restriction. The bottom marker counts as a stack symbol.
inline std::size_t compute_N(const Pdm& c) {
  const std::size_t q = c.states.size();
  return 2 * q * q * c.stack_symbols.size() + 1;
}

/// The network with the contributor replaced by its N-restriction.
inline Network restricted_network(const Network& net, std::size_t budget = 200'000) {
  const auto& c = std::get<Pdm>(net.contributor);
  return Network{net.values, net.leader, restrict(c, static_cast<int>(compute_N(c)), budget).fsm};
}

/// Büchi emptiness for pushdown leader and contributor. The witness refers
/// to the network returned by `restricted_network`.
inline CheckResult check_pdm_pdm(const Network& net, const SymbolicOptions& opts = {}) {
  if (!is_pdm(net.contributor)) throw Error("pdm-pdm mode needs a pushdown contributor");
  const auto& c = std::get<Pdm>(net.contributor);
  const std::size_t n = compute_N(c);
  CheckResult res;
  Network reduced;
  try {
    const auto r = restrict(c, static_cast<int>(n), opts.restriction_budget);
    reduced = Network{net.values, as_pdm(net.leader), r.fsm};
  } catch (const BudgetExceeded& e) {
    res.verdict = Verdict::budget;
    res.note = std::string(e.what()) + " (N = " + std::to_string(n) + ")";
    res.stats.restriction_bound = n;
    return res;
  }
  res = check_pdm_fsm(reduced, opts);
  res.stats.restriction_bound = n;
  res.stats.restricted_states = state_count(reduced.contributor);
  return res;
}

// ---------------------------------------------------------------------------
// Distributions

/// Child runs of `parent` with embedding psi[c][i], the parent position
/// (1-based rule index) of child c's rule i + 1.
struct Distribution {
  RunPrefix parent;
  std::vector<RunPrefix> children;
  std::vector<std::vector<std::size_t>> psi;
};

struct DistributionCheck {
  bool valid = true;
  std::string reason;

  explicit operator bool() const { return valid; }
};

/// Finite runs only: rule match, surjectivity onto the parent's positions,
/// strict monotonicity, and legality of every run.
inline DistributionCheck validate_distribution(const Distribution& d) {
  auto fail = [](std::string r) { return DistributionCheck{false, std::move(r)}; };
  if (d.parent.lasso) return fail("lasso runs are not supported");
  if (auto e = run_error(d.parent)) return fail("parent: " + *e);
  if (d.psi.size() != d.children.size()) return fail("embedding does not cover every child");
  const std::size_t n = d.parent.rules.size();
  std::vector<bool> hit(n + 1, false);
  for (std::size_t c = 0; c < d.children.size(); ++c) {
    const auto& ch = d.children[c];
    const std::string who = "child " + std::to_string(c + 1);
    if (ch.lasso) return fail(who + ": lasso runs are not supported");
    if (auto e = run_error(ch)) return fail(who + ": " + *e);
    if (d.psi[c].size() != ch.rules.size()) return fail(who + ": embedding has the wrong length");
    for (std::size_t i = 0; i < ch.rules.size(); ++i) {
      const std::size_t to = d.psi[c][i];
      const std::string at = who + " position " + std::to_string(i + 1);
      if (to < 1 || to > n) return fail(at + " maps outside the parent");
      if (i > 0 && to <= d.psi[c][i - 1]) return fail(at + " breaks strict monotonicity");
      if (ch.rules[i] != d.parent.rules[to - 1]) return fail(at + " maps to a different rule");
      hit[to] = true;
    }
  }
  for (std::size_t p = 1; p <= n; ++p)
    if (!hit[p]) return fail("parent position " + std::to_string(p) + " is not covered");
  return {};
}

namespace detail {

/// Number of child rules mapped to parent positions at most `i`.
inline std::size_t last_before(const std::vector<std::size_t>& psi, std::size_t i) {
  return static_cast<std::size_t>(std::upper_bound(psi.begin(), psi.end(), i) - psi.begin());
}

}  // namespace detail

/// Every child configuration aligned with parent positions 0..z has
/// effective stack height at most `bound` within its own run.
inline bool is_bounded(const Distribution& d, std::size_t z, int bound) {
  for (std::size_t c = 0; c < d.children.size(); ++c) {
    const auto prof = esh_profile(configurations(d.children[c].machine, d.children[c].rules));
    for (std::size_t i = 0; i <= z; ++i)
      if (prof[detail::last_before(d.psi[c], i)] > bound) return false;
  }
  return true;
}

/// At every parent position of effective stack height 1, every child is in
/// the same configuration, also with effective stack height 1.
inline bool is_synchronized(const Distribution& d) {
  const auto pcs = configurations(d.parent.machine, d.parent.rules);
  const auto pprof = esh_profile(pcs);
  for (std::size_t c = 0; c < d.children.size(); ++c) {
    const auto ccs = configurations(d.children[c].machine, d.children[c].rules);
    const auto cprof = esh_profile(ccs);
    for (std::size_t i = 0; i < pcs.size(); ++i) {
      if (pprof[i] != 1) continue;
      const std::size_t j = detail::last_before(d.psi[c], i);
      if (ccs[j] != pcs[i] || cprof[j] != 1) return false;
    }
  }
  return true;
}

/// Splits a finite run at the first position `z` whose effective stack
/// height is n + 1 into two runs, each dropping one pair of matching
/// push and pop segments between three stack levels that agree on the
/// state after the push, the pushed symbol, and the state after the pop.
/// The levels considered are the n topmost of the active prefix at `z`,
/// all of which are pushed before `z` and popped after it.
inline Distribution flatten_run(const RunPrefix& run, std::size_t z, std::size_t n) {
  if (run.lasso) throw Error("flatten_run expects a finite run");
  const auto cs = configurations(run.machine, run.rules);
  if (z >= cs.size()) throw Error("position " + std::to_string(z) + " out of range");
  const auto prof = esh_profile(cs);
  if (static_cast<std::size_t>(prof[z]) != n + 1)
    throw Error("effective stack height at position " + std::to_string(z) + " is " + std::to_string(prof[z]) +
                ", not " + std::to_string(n + 1));
  for (std::size_t i = 0; i < z; ++i)
    if (static_cast<std::size_t>(prof[i]) > n)
      throw Error("position " + std::to_string(i) + " already exceeds the bound");

  const std::size_t top = cs[z].stack.size();
  struct Level {
    std::size_t push_pos, pop_pos;
    int state_after_push, symbol, state_after_pop;
  };
  std::vector<Level> levels;  // bottom to top
  for (std::size_t h = top - n + 1; h <= top; ++h) {
    std::size_t push = z;
    while (cs[push - 1].stack.size() >= h) --push;
    std::size_t pop = z + 1;
    while (cs[pop].stack.size() >= h) ++pop;
    levels.push_back({push, pop, cs[push].state, cs[z].stack[h - 1], cs[pop].state});
  }

  std::optional<std::array<std::size_t, 3>> pick;
  for (std::size_t a = 0; a < levels.size() && !pick; ++a)
    for (std::size_t b = a + 1; b < levels.size() && !pick; ++b)
      for (std::size_t c = b + 1; c < levels.size() && !pick; ++c) {
        auto key = [](const Level& l) { return std::tuple(l.state_after_push, l.symbol, l.state_after_pop); };
        if (key(levels[a]) == key(levels[b]) && key(levels[b]) == key(levels[c])) pick = {a, b, c};
      }
  if (!pick) throw Error("no three stack levels agree; the bound is too small for this machine");
  const auto& l1 = levels[(*pick)[0]];
  const auto& l2 = levels[(*pick)[1]];
  const auto& l3 = levels[(*pick)[2]];

  // Keeps parent rule positions outside (lo1, hi1] and (lo2, hi2].
  auto child = [&](std::size_t lo1, std::size_t hi1, std::size_t lo2, std::size_t hi2) {
    RunPrefix r{run.machine, {}, std::nullopt};
    std::vector<std::size_t> psi;
    for (std::size_t p = 1; p <= run.rules.size(); ++p) {
      if ((p > lo1 && p <= hi1) || (p > lo2 && p <= hi2)) continue;
      r.rules.push_back(run.rules[p - 1]);
      psi.push_back(p);
    }
    return std::make_pair(r, psi);
  };
  Distribution d;
  d.parent = run;
  for (auto [r, psi] : {child(l1.push_pos, l2.push_pos, l2.pop_pos, l1.pop_pos),
                        child(l2.push_pos, l3.push_pos, l3.pop_pos, l2.pop_pos)}) {
    d.children.push_back(std::move(r));
    d.psi.push_back(std::move(psi));
  }
  return d;
}

inline Distribution flatten_run(const RunPrefix& run, std::size_t z) {
  return flatten_run(run, z, compute_N(run.machine));
}

}  // namespace paramck
