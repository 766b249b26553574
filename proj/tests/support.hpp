#pragma once

// Random instance generators and brute-force oracles shared by the unit and
// acceptance tests.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "paramck/io.hpp"
#include "paramck/machines.hpp"
#include "paramck/parikh.hpp"

namespace paramck::testing {

using Vec = std::vector<std::int64_t>;

inline Fsa random_fsa(std::mt19937& rng, int max_states = 5, int max_letters = 3) {
  std::uniform_int_distribution<int> ns(1, max_states), nl(1, max_letters), ne(0, 8);
  Fsa f;
  f.states = ns(rng);
  f.letters = nl(rng);
  std::uniform_int_distribution<int> st(0, f.states - 1), lt(0, f.letters - 1), coin(0, 2);
  f.initial = st(rng);
  f.final.assign(static_cast<std::size_t>(f.states), false);
  for (int q = 0; q < f.states; ++q) f.final[static_cast<std::size_t>(q)] = coin(rng) == 0;
  f.final[static_cast<std::size_t>(st(rng))] = true;
  const int e = ne(rng);
  for (int i = 0; i < e; ++i) f.edges.push_back({st(rng), lt(rng), st(rng)});
  return f;
}

inline Grammar random_grammar(std::mt19937& rng, int max_nts = 5, int max_terms = 3) {
  std::uniform_int_distribution<int> nn(1, max_nts), nt(1, max_terms), np(1, 8), len(0, 3), coin(0, 1);
  Grammar g;
  g.nonterminals = nn(rng);
  g.terminals = nt(rng);
  g.start = 0;
  std::uniform_int_distribution<int> a(0, g.nonterminals - 1), t(0, g.terminals - 1);
  const int p = np(rng);
  for (int i = 0; i < p; ++i) {
    Production pr{a(rng), {}};
    const int l = len(rng);
    for (int j = 0; j < l; ++j)
      pr.rhs.push_back(coin(rng) ? Symbol{true, t(rng)} : Symbol{false, a(rng)});
    g.productions.push_back(pr);
  }
  return g;
}

/// Parikh vectors of accepted words of length <= bound.
inline std::set<Vec> brute_parikh(const Fsa& f, int bound) {
  std::set<std::pair<int, Vec>> seen;
  std::vector<std::pair<int, Vec>> frontier{{f.initial, Vec(static_cast<std::size_t>(f.letters), 0)}};
  seen.insert(frontier.front());
  std::set<Vec> out;
  for (int len = 0; len <= bound; ++len) {
    std::vector<std::pair<int, Vec>> next;
    for (const auto& [q, v] : frontier) {
      if (f.final[static_cast<std::size_t>(q)]) out.insert(v);
      if (len == bound) continue;
      for (const auto& e : f.edges) {
        if (e.src != q) continue;
        auto w = v;
        ++w[static_cast<std::size_t>(e.letter)];
        if (seen.insert({e.dst, w}).second) next.emplace_back(e.dst, w);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

/// Parikh vectors of derivable terminal words of length <= bound (least
/// fixpoint over commutative images).
inline std::set<Vec> brute_parikh(const Grammar& g, int bound) {
  std::vector<std::set<Vec>> img(static_cast<std::size_t>(g.nonterminals));
  auto sum = [](const Vec& v) {
    std::int64_t s = 0;
    for (auto x : v) s += x;
    return s;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.productions) {
      std::set<Vec> acc{Vec(static_cast<std::size_t>(g.terminals), 0)};
      for (const auto& s : p.rhs) {
        std::set<Vec> next;
        for (const auto& v : acc) {
          if (s.terminal) {
            auto w = v;
            ++w[static_cast<std::size_t>(s.id)];
            if (sum(w) <= bound) next.insert(w);
          } else {
            for (const auto& u : img[static_cast<std::size_t>(s.id)]) {
              auto w = v;
              for (std::size_t i = 0; i < w.size(); ++i) w[i] += u[i];
              if (sum(w) <= bound) next.insert(w);
            }
          }
        }
        acc = std::move(next);
      }
      for (const auto& v : acc)
        if (img[static_cast<std::size_t>(p.lhs)].insert(v).second) changed = true;
    }
  }
  return img[static_cast<std::size_t>(g.start)];
}

inline void all_vectors(std::size_t dim, int bound, Vec& cur, std::size_t i, int left,
                        std::vector<Vec>& out) {
  if (i == dim) {
    out.push_back(cur);
    return;
  }
  for (int x = 0; x <= left; ++x) {
    cur[i] = x;
    all_vectors(dim, bound, cur, i + 1, left - x, out);
  }
  cur[i] = 0;
}

/// Vectors with component sum <= bound that the Parikh system admits.
inline std::set<Vec> solver_parikh(const ParikhSystem& ps, int bound) {
  std::vector<Vec> cands;
  Vec cur(ps.letter_vars.size(), 0);
  all_vectors(ps.letter_vars.size(), bound, cur, 0, bound, cands);
  std::set<Vec> out;
  for (const auto& v : cands) {
    auto sys = ps.system;
    for (std::size_t i = 0; i < v.size(); ++i)
      sys.require(Constraint::eq(LinearExpr::var(ps.letter_vars[i]), LinearExpr(v[i])));
    if (solve(sys)) out.insert(v);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Network from sample files under the samples directory.
inline Network sample_network(const std::string& dir, const std::string& leader,
                              const std::string& contributor, const std::string& property) {
  const std::string base = std::string(PARAMCK_SAMPLES_DIR) + "/" + dir + "/";
  return build_network(read_file(base + leader), read_file(base + contributor),
                       read_file(base + property));
}

inline ValueDomain value_domain(int n) {
  ValueDomain g;
  for (int v = 1; v <= n; ++v) g.names.push_back(std::to_string(v));
  return g;
}

inline Action random_action(std::mt19937& rng, Role role, int values) {
  std::uniform_int_distribution<int> op(0, 1), val(0, values - 1);
  return {role, op(rng) ? Op::write : Op::read, val(rng)};
}

inline Fsm random_fsm(std::mt19937& rng, Role role, int states, int values, int max_trans,
                      bool buchi) {
  Fsm f;
  for (int q = 0; q < states; ++q) f.states.push_back("s" + std::to_string(q));
  f.initial = 0;
  std::uniform_int_distribution<int> st(0, states - 1), nt(0, max_trans), coin(0, 1);
  const int n = nt(rng);
  for (int i = 0; i < n; ++i) f.transitions.push_back({st(rng), random_action(rng, role, values), st(rng)});
  if (buchi) {
    f.accepting.emplace(static_cast<std::size_t>(states), false);
    for (int q = 0; q < states; ++q) (*f.accepting)[static_cast<std::size_t>(q)] = coin(rng) == 1;
  }
  return f;
}

/// Random pushdown machine over {bot, A, B...}; `symbols` counts the bottom.
inline Pdm random_pdm(std::mt19937& rng, Role role, int states, int symbols, int values,
                      int max_rules, bool buchi) {
  Pdm p;
  for (int q = 0; q < states; ++q) p.states.push_back("p" + std::to_string(q));
  p.stack_symbols.push_back("bot");
  for (int s = 1; s < symbols; ++s) p.stack_symbols.push_back(std::string(1, static_cast<char>('A' + s - 1)));
  p.initial = 0;
  std::uniform_int_distribution<int> st(0, states - 1), sym(0, symbols - 1), nr(1, max_rules), coin(0, 1);
  const int n = nr(rng);
  for (int i = 0; i < n; ++i) {
    PdmRule r{st(rng), random_action(rng, role, values), sym(rng), st(rng), StackOp::pop, -1};
    if (symbols > 1 && (r.top == Pdm::kBottom || coin(rng))) {
      r.op = StackOp::push;
      r.pushed = 1 + std::uniform_int_distribution<int>(0, symbols - 2)(rng);
    }
    p.rules.push_back(r);
  }
  if (buchi) {
    p.accepting.emplace(static_cast<std::size_t>(states), false);
    for (int q = 0; q < states; ++q) (*p.accepting)[static_cast<std::size_t>(q)] = coin(rng) == 1;
  }
  return p;
}

/// Property over leader actions: each (state, action) pair gets a random
/// successor with probability 3/4; at least one accepting state.
inline Fsm random_property(std::mt19937& rng, int states, int values) {
  Fsm f;
  for (int q = 0; q < states; ++q) f.states.push_back("a" + std::to_string(q));
  f.initial = 0;
  std::uniform_int_distribution<int> st(0, states - 1), quarter(0, 3), coin(0, 1);
  for (int q = 0; q < states; ++q)
    for (Op op : {Op::read, Op::write})
      for (Value v = 0; v < values; ++v)
        if (quarter(rng) != 0) f.transitions.push_back({q, {Role::leader, op, v}, st(rng)});
  f.accepting.emplace(static_cast<std::size_t>(states), false);
  for (int q = 0; q < states; ++q) (*f.accepting)[static_cast<std::size_t>(q)] = coin(rng) == 1;
  (*f.accepting)[static_cast<std::size_t>(st(rng))] = true;
  return f;
}

inline Fsm random_fsm_exact(std::mt19937& rng, Role role, int states, int values, int min_trans,
                            int max_trans) {
  Fsm f = random_fsm(rng, role, states, values, 0, false);
  const int n = std::uniform_int_distribution<int>(min_trans, max_trans)(rng);
  std::uniform_int_distribution<int> st(0, states - 1);
  for (int i = 0; i < n; ++i) f.transitions.push_back({st(rng), random_action(rng, role, values), st(rng)});
  return f;
}

/// Random finite-state network: leader and property of at most two states
/// each (product at most four), contributor of at most `max_c` states.
inline Network random_fsm_network(std::mt19937& rng, int max_c = 3, int max_values = 2) {
  std::uniform_int_distribution<int> two(1, 2), nc(1, max_c), nv(1, max_values);
  const int values = nv(rng);
  Network net;
  net.values = value_domain(values);
  const Fsm property = random_property(rng, two(rng), values);
  const Fsm leader = random_fsm_exact(rng, Role::leader, two(rng), values, 0, 5);
  net.leader = buchi_product(property, leader);
  net.contributor = random_fsm_exact(rng, Role::contributor, nc(rng), values, 1, 6);
  return net;
}

/// One state, stack {bot, alpha}: r_a pushes alpha on bot, r_b pushes alpha
/// on alpha, r_c pops alpha. Rule i writes value i.
inline Pdm three_rule_pdm(Role role = Role::contributor) {
  return Pdm{{"p"},
             {"bot", "alpha"},
             0,
             {{0, {role, Op::write, 0}, Pdm::kBottom, 0, StackOp::push, 1},
              {0, {role, Op::write, 1}, 1, 0, StackOp::push, 1},
              {0, {role, Op::write, 2}, 1, 0, StackOp::pop, -1}},
             std::nullopt};
}

/// r_a r_b r_b r_c r_c r_c
inline std::vector<int> three_rule_sequence() { return {0, 1, 1, 2, 2, 2}; }

/// Pushdown leader (producted with a random property) and a one-state
/// pushdown contributor over {bot, A}, so the restriction bound is 5.
inline Network random_pdm_network(std::mt19937& rng) {
  std::uniform_int_distribution<int> two(1, 2);
  const int values = two(rng);
  Network net;
  net.values = value_domain(values);
  const Fsm property = random_property(rng, two(rng), values);
  net.leader = buchi_product(property, random_pdm(rng, Role::leader, two(rng), 2, values, 4, false));
  net.contributor = random_pdm(rng, Role::contributor, 1, 2, values, 4, false);
  return net;
}

}  // namespace paramck::testing
