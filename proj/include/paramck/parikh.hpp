#pragma once

// Parikh images of finite automata and context-free grammars as linear
// systems, and the inverse direction: turning a model back into a word.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "linear.hpp"

namespace paramck {

struct FsaEdge {
  int src = 0;
  int letter = 0;
  int dst = 0;
};

/// Finite automaton over letters 0..letters-1.
struct Fsa {
  int states = 0;
  int letters = 0;
  int initial = 0;
  std::vector<bool> final;
  std::vector<FsaEdge> edges;
};

/// A Parikh system together with the variables callers care about: one
/// letter count per letter and one multiplicity per edge or production.
struct ParikhSystem {
  LinearSystem system;
  std::vector<int> letter_vars;
  std::vector<int> item_vars;

  std::vector<std::int64_t> letters(const Assignment& a) const {
    std::vector<std::int64_t> out;
    for (int v : letter_vars) out.push_back(a.at(static_cast<std::size_t>(v)));
    return out;
  }
};

/// Solutions projected on `letter_vars` are exactly the Parikh vectors of
/// L(fsa). Flow balance per state plus depth variables that force every used
/// state to hang off the initial state through used edges.
inline ParikhSystem parikh_fsa(const Fsa& fsa) {
  ParikhSystem ps;
  auto& sys = ps.system;
  const auto n = static_cast<std::size_t>(fsa.states);
  for (int t = 0; t < fsa.letters; ++t) ps.letter_vars.push_back(sys.add_variable("x" + std::to_string(t)));
  for (std::size_t e = 0; e < fsa.edges.size(); ++e)
    ps.item_vars.push_back(sys.add_variable("y" + std::to_string(e)));

  std::vector<LinearExpr> in(n), out(n), count(static_cast<std::size_t>(fsa.letters));
  for (std::size_t e = 0; e < fsa.edges.size(); ++e) {
    const auto& ed = fsa.edges[e];
    in[static_cast<std::size_t>(ed.dst)].add(ps.item_vars[e]);
    out[static_cast<std::size_t>(ed.src)].add(ps.item_vars[e]);
    count[static_cast<std::size_t>(ed.letter)].add(ps.item_vars[e]);
  }
  for (int t = 0; t < fsa.letters; ++t)
    sys.require(Constraint::eq(LinearExpr::var(ps.letter_vars[static_cast<std::size_t>(t)]),
                               count[static_cast<std::size_t>(t)]));

  LinearExpr finals;
  for (std::size_t q = 0; q < n; ++q) {
    LinearExpr lhs = in[q];
    if (static_cast<int>(q) == fsa.initial) lhs.constant += 1;
    LinearExpr rhs = out[q];
    if (q < fsa.final.size() && fsa.final[q]) {
      const int f = sys.add_variable("f" + std::to_string(q));
      rhs.add(f);
      finals.add(f);
    }
    sys.require(Constraint::eq(lhs, rhs));
  }
  sys.require(Constraint::eq(finals, LinearExpr(1)));

  std::vector<int> depth(n, -1);
  for (std::size_t q = 0; q < n; ++q)
    if (static_cast<int>(q) != fsa.initial) {
      depth[q] = sys.add_variable("z" + std::to_string(q));
      sys.require(Constraint::le(LinearExpr::var(depth[q]),
                                 LinearExpr(static_cast<std::int64_t>(n) - 1)));
    }
  auto depth_of = [&](int q) {
    return depth[static_cast<std::size_t>(q)] < 0 ? LinearExpr(0)
                                                  : LinearExpr::var(depth[static_cast<std::size_t>(q)]);
  };
  for (std::size_t q = 0; q < n; ++q) {
    if (static_cast<int>(q) == fsa.initial) continue;
    std::vector<Constraint> alts{Constraint::eq(in[q], LinearExpr(0))};
    for (std::size_t e = 0; e < fsa.edges.size(); ++e) {
      const auto& ed = fsa.edges[e];
      if (ed.dst != static_cast<int>(q) || ed.src == ed.dst) continue;
      alts.push_back(Constraint::all(
          {Constraint::ge(LinearExpr::var(ps.item_vars[e]), LinearExpr(1)),
           Constraint::ge(LinearExpr::var(depth[q]), depth_of(ed.src) + LinearExpr(1))}));
    }
    sys.require(Constraint::any(std::move(alts)));
  }
  return ps;
}

/// A word of L(fsa) whose letter counts match `a` (Hierholzer on the edge
/// multiplicities; edges taken in index order).
inline std::vector<int> euler_witness(const Fsa& fsa, const ParikhSystem& ps, const Assignment& a) {
  std::vector<std::int64_t> left;
  std::int64_t total = 0;
  for (int v : ps.item_vars) {
    left.push_back(a.at(static_cast<std::size_t>(v)));
    total += left.back();
  }
  std::vector<std::vector<int>> outgoing(static_cast<std::size_t>(fsa.states));
  for (std::size_t e = 0; e < fsa.edges.size(); ++e)
    outgoing[static_cast<std::size_t>(fsa.edges[e].src)].push_back(static_cast<int>(e));
  std::vector<std::size_t> cursor(outgoing.size(), 0);

  // Stack of (state, edge used to enter it).
  std::vector<std::pair<int, int>> stack{{fsa.initial, -1}};
  std::vector<int> path;
  while (!stack.empty()) {
    const int q = stack.back().first;
    auto& cur = cursor[static_cast<std::size_t>(q)];
    const auto& outs = outgoing[static_cast<std::size_t>(q)];
    while (cur < outs.size() && left[static_cast<std::size_t>(outs[cur])] == 0) ++cur;
    if (cur < outs.size()) {
      const int e = outs[cur];
      --left[static_cast<std::size_t>(e)];
      stack.emplace_back(fsa.edges[static_cast<std::size_t>(e)].dst, e);
    } else {
      if (stack.back().second >= 0) path.push_back(stack.back().second);
      stack.pop_back();
    }
  }
  std::reverse(path.begin(), path.end());
  if (static_cast<std::int64_t>(path.size()) != total)
    throw Error("euler walk does not cover the edge multiset");
  int q = fsa.initial;
  std::vector<int> word;
  for (int e : path) {
    const auto& ed = fsa.edges[static_cast<std::size_t>(e)];
    if (ed.src != q) throw Error("euler walk is disconnected");
    q = ed.dst;
    word.push_back(ed.letter);
  }
  if (!fsa.final.at(static_cast<std::size_t>(q))) throw Error("euler walk ends in a non-final state");
  return word;
}

// ---------------------------------------------------------------------------
// Grammars

struct Symbol {
  bool terminal = false;
  int id = 0;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Production {
  int lhs = 0;
  std::vector<Symbol> rhs;
};

struct Grammar {
  int nonterminals = 0;
  int terminals = 0;
  int start = 0;
  std::vector<Production> productions;

  Symbol nt(int id) const { return {false, id}; }
  Symbol term(int id) const { return {true, id}; }
};

/// Drops unproductive symbols, then symbols unreachable from the start.
/// Nonterminal numbering is kept; only productions are removed.
inline Grammar reduce(const Grammar& g) {
  const auto n = static_cast<std::size_t>(g.nonterminals);
  std::vector<bool> productive(n, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.productions) {
      if (productive[static_cast<std::size_t>(p.lhs)]) continue;
      if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) {
            return s.terminal || productive[static_cast<std::size_t>(s.id)];
          })) {
        productive[static_cast<std::size_t>(p.lhs)] = true;
        changed = true;
      }
    }
  }
  std::vector<const Production*> useful;
  for (const auto& p : g.productions)
    if (productive[static_cast<std::size_t>(p.lhs)] &&
        std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) {
          return s.terminal || productive[static_cast<std::size_t>(s.id)];
        }))
      useful.push_back(&p);

  std::vector<bool> reach(n, false);
  Grammar out{g.nonterminals, g.terminals, g.start, {}};
  if (n == 0 || !productive[static_cast<std::size_t>(g.start)]) return out;
  reach[static_cast<std::size_t>(g.start)] = true;
  std::deque<int> work{g.start};
  while (!work.empty()) {
    const int a = work.front();
    work.pop_front();
    for (const auto* p : useful) {
      if (p->lhs != a) continue;
      for (const auto& s : p->rhs)
        if (!s.terminal && !reach[static_cast<std::size_t>(s.id)]) {
          reach[static_cast<std::size_t>(s.id)] = true;
          work.push_back(s.id);
        }
    }
  }
  for (const auto* p : useful)
    if (reach[static_cast<std::size_t>(p->lhs)]) out.productions.push_back(*p);
  return out;
}

/// Solutions projected on `letter_vars` are exactly the Parikh vectors of
/// L(g). `item_vars` indexes the productions of `reduce(g)`, which is what
/// `derive_word` expects. An empty language yields an unsatisfiable system.
inline ParikhSystem parikh_cfg(const Grammar& input) {
  const Grammar g = reduce(input);
  ParikhSystem ps;
  auto& sys = ps.system;
  const auto n = static_cast<std::size_t>(g.nonterminals);
  for (int t = 0; t < g.terminals; ++t) ps.letter_vars.push_back(sys.add_variable("x" + std::to_string(t)));
  if (g.productions.empty()) {
    sys.require(Constraint::falsity());
    return ps;
  }
  for (std::size_t p = 0; p < g.productions.size(); ++p)
    ps.item_vars.push_back(sys.add_variable("y" + std::to_string(p)));

  std::vector<LinearExpr> balance(n), produced(n), count(static_cast<std::size_t>(g.terminals));
  for (std::size_t p = 0; p < g.productions.size(); ++p) {
    const auto& pr = g.productions[p];
    const int y = ps.item_vars[p];
    balance[static_cast<std::size_t>(pr.lhs)].add(y, 1);
    produced[static_cast<std::size_t>(pr.lhs)].add(y, 1);
    for (const auto& s : pr.rhs) {
      if (s.terminal) count[static_cast<std::size_t>(s.id)].add(y, 1);
      else balance[static_cast<std::size_t>(s.id)].add(y, -1);
    }
  }
  for (int t = 0; t < g.terminals; ++t)
    sys.require(Constraint::eq(LinearExpr::var(ps.letter_vars[static_cast<std::size_t>(t)]),
                               count[static_cast<std::size_t>(t)]));
  for (std::size_t a = 0; a < n; ++a)
    sys.require(Constraint::eq(balance[a],
                               LinearExpr(static_cast<int>(a) == g.start ? 1 : 0)));

  std::vector<int> depth(n, -1);
  for (std::size_t a = 0; a < n; ++a)
    if (static_cast<int>(a) != g.start && !produced[a].terms.empty()) {
      depth[a] = sys.add_variable("z" + std::to_string(a));
      sys.require(Constraint::le(LinearExpr::var(depth[a]),
                                 LinearExpr(static_cast<std::int64_t>(n) - 1)));
    }
  auto depth_of = [&](int a) {
    return depth[static_cast<std::size_t>(a)] < 0 ? LinearExpr(0)
                                                  : LinearExpr::var(depth[static_cast<std::size_t>(a)]);
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (depth[a] < 0) continue;
    std::vector<Constraint> alts{Constraint::eq(produced[a], LinearExpr(0))};
    for (std::size_t p = 0; p < g.productions.size(); ++p) {
      const auto& pr = g.productions[p];
      if (pr.lhs == static_cast<int>(a)) continue;
      if (std::none_of(pr.rhs.begin(), pr.rhs.end(), [&](const Symbol& s) {
            return !s.terminal && s.id == static_cast<int>(a);
          }))
        continue;
      alts.push_back(Constraint::all(
          {Constraint::ge(LinearExpr::var(ps.item_vars[p]), LinearExpr(1)),
           Constraint::ge(LinearExpr::var(depth[a]), depth_of(pr.lhs) + LinearExpr(1))}));
    }
    sys.require(Constraint::any(std::move(alts)));
  }
  return ps;
}

namespace detail {

struct TreeNode {
  int nonterminal = 0;
  int production = -1;
  std::vector<int> children;  // node index per nonterminal occurrence of the rhs
};

// Every nonterminal with leftover productions is reachable from an open
// symbol through leftover productions.
inline bool leftovers_connected(const Grammar& g, const std::vector<std::int64_t>& left,
                                const std::vector<int>& open_symbols) {
  const auto n = static_cast<std::size_t>(g.nonterminals);
  std::vector<bool> seen(n, false);
  std::vector<int> work;
  for (int a : open_symbols)
    if (!seen[static_cast<std::size_t>(a)]) {
      seen[static_cast<std::size_t>(a)] = true;
      work.push_back(a);
    }
  while (!work.empty()) {
    const int a = work.back();
    work.pop_back();
    for (std::size_t p = 0; p < g.productions.size(); ++p) {
      if (left[p] == 0 || g.productions[p].lhs != a) continue;
      for (const auto& s : g.productions[p].rhs)
        if (!s.terminal && !seen[static_cast<std::size_t>(s.id)]) {
          seen[static_cast<std::size_t>(s.id)] = true;
          work.push_back(s.id);
        }
    }
  }
  for (std::size_t p = 0; p < g.productions.size(); ++p)
    if (left[p] > 0 && !seen[static_cast<std::size_t>(g.productions[p].lhs)]) return false;
  return true;
}

}  // namespace detail

/// A word of L(g) using production `p` of `reduce(g)` exactly counts[p]
/// times. Expands the derivation depth-first, taking the lowest-index
/// production that keeps all leftover productions reachable from the open
/// symbols; balanced and connected counts never get stuck this way.
inline std::vector<int> derive_word(const Grammar& input, const std::vector<std::int64_t>& counts) {
  const Grammar g = reduce(input);
  if (counts.size() != g.productions.size()) throw Error("production count vector has wrong size");
  auto left = counts;
  std::vector<detail::TreeNode> nodes{{g.start, -1, {}}};
  std::vector<int> open{0};

  while (!open.empty()) {
    const int v = open.back();
    open.pop_back();
    const int a = nodes[static_cast<std::size_t>(v)].nonterminal;
    std::vector<int> rest;
    for (int u : open) rest.push_back(nodes[static_cast<std::size_t>(u)].nonterminal);
    int chosen = -1;
    for (std::size_t p = 0; p < g.productions.size() && chosen < 0; ++p) {
      if (left[p] == 0 || g.productions[p].lhs != a) continue;
      --left[p];
      auto syms = rest;
      for (const auto& s : g.productions[p].rhs)
        if (!s.terminal) syms.push_back(s.id);
      if (detail::leftovers_connected(g, left, syms)) chosen = static_cast<int>(p);
      else ++left[p];
    }
    if (chosen < 0) throw Error("production counts admit no derivation");
    nodes[static_cast<std::size_t>(v)].production = chosen;
    std::vector<int> kids;
    for (const auto& s : g.productions[static_cast<std::size_t>(chosen)].rhs) {
      if (s.terminal) continue;
      nodes.push_back({s.id, -1, {}});
      kids.push_back(static_cast<int>(nodes.size()) - 1);
    }
    nodes[static_cast<std::size_t>(v)].children = kids;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) open.push_back(*it);
  }
  if (std::any_of(left.begin(), left.end(), [](std::int64_t c) { return c != 0; }))
    throw Error("production counts admit no derivation");

  std::vector<int> word;
  std::vector<std::pair<int, std::size_t>> walk{{0, 0}};
  std::vector<std::size_t> next_child{0};
  while (!walk.empty()) {
    auto& [v, pos] = walk.back();
    const auto& node = nodes[static_cast<std::size_t>(v)];
    const auto& rhs = g.productions[static_cast<std::size_t>(node.production)].rhs;
    if (pos == rhs.size()) {
      walk.pop_back();
      next_child.pop_back();
      continue;
    }
    const Symbol s = rhs[pos++];
    if (s.terminal) {
      word.push_back(s.id);
    } else {
      const int child = node.children[next_child.back()++];
      walk.emplace_back(child, 0);
      next_child.push_back(0);
    }
  }
  return word;
}

}  // namespace paramck
