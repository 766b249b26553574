#include <catch_amalgamated.hpp>

#include <random>

#include "paramck/io.hpp"
#include "paramck/machines.hpp"
#include "support.hpp"

using namespace paramck;
using namespace paramck::testing;

namespace {

Machine sample(const std::string& path, Role role, ValueDomain& g) {
  return parse_machine(read_file(std::string(PARAMCK_SAMPLES_DIR) + "/" + path), role, g);
}

Action rd(int v) { return {Role::leader, Op::read, v}; }

// Büchi acceptance of u v^omega by a (possibly non-Büchi, then all-accepting)
// finite-state machine, by search over (state, word position).
bool accepts_lasso(const Fsm& m, const std::vector<Action>& u, const std::vector<Action>& v) {
  const std::size_t len = u.size() + v.size();
  const std::size_t n = m.states.size();
  auto letter = [&](std::size_t i) { return i < u.size() ? u[i] : v[i - u.size()]; };
  auto next_pos = [&](std::size_t i) { return i + 1 < len ? i + 1 : u.size(); };
  auto node = [&](int q, std::size_t i) { return static_cast<std::size_t>(q) * len + i; };
  std::vector<std::vector<std::size_t>> adj(n * len);
  for (std::size_t i = 0; i < len; ++i)
    for (const auto& t : m.transitions)
      if (t.action == letter(i)) adj[node(t.src, i)].push_back(node(t.dst, next_pos(i)));
  auto reach = [&](std::size_t from) {
    std::vector<bool> seen(adj.size(), false);
    std::vector<std::size_t> work{from};
    while (!work.empty()) {
      auto x = work.back();
      work.pop_back();
      for (auto y : adj[x])
        if (!seen[y]) {
          seen[y] = true;
          work.push_back(y);
        }
    }
    return seen;
  };
  const auto from_init = reach(node(m.initial, 0));
  for (std::size_t q = 0; q < n; ++q) {
    if (!m.accepts(static_cast<int>(q))) continue;
    for (std::size_t i = u.size(); i < len; ++i) {
      const auto x = node(static_cast<int>(q), i);
      if (!from_init[x] && !(q == static_cast<std::size_t>(m.initial) && i == 0)) continue;
      if (reach(x)[x]) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("validate accepts the three-writer leader") {
  ValueDomain g;
  const auto m = sample("three_writers/leader.machine", Role::leader, g);
  CHECK(validate(m, g).empty());
  CHECK(std::get<Fsm>(m).states.size() == 3);
}

TEST_CASE("validate reports undeclared states and unused values") {
  ValueDomain g = value_domain(2);
  Fsm bad{{"q0"}, 0, {{0, rd(0), 3}}, std::nullopt};
  auto ds = validate(bad, g);
  CHECK(has_errors(ds));

  Fsm ok{{"q0"}, 0, {{0, rd(0), 0}}, std::nullopt};
  ds = validate(ok, g);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].severity == Severity::warning);
  CHECK(ds[0].message == "value 2 unused");
  CHECK_FALSE(has_errors(ds));
}

TEST_CASE("validate rejects pushing the bottom symbol") {
  Pdm p{{"p"}, {"bot", "A"}, 0, {{0, rd(0), 0, 0, StackOp::push, 0}}, std::nullopt};
  CHECK(has_errors(validate(p, value_domain(1))));
}

TEST_CASE("product with the universal property keeps the leader") {
  ValueDomain g;
  const auto d = sample("three_writers/leader.machine", Role::leader, g);
  Fsm universal{{"u"}, 0, {}, std::vector<bool>{true}};
  for (Value v = 0; v < 3; ++v) {
    universal.transitions.push_back({0, rd(v), 0});
    universal.transitions.push_back({0, {Role::leader, Op::write, v}, 0});
  }
  const auto p = std::get<Fsm>(buchi_product(universal, d));
  CHECK(p.states.size() == 3);
  CHECK(p.transitions.size() == 3);
  for (int q = 0; q < 3; ++q) CHECK(p.accepts(q));
}

TEST_CASE("product with infinitely many r(1)") {
  ValueDomain g;
  const auto d = sample("three_writers/leader.machine", Role::leader, g);
  const auto a = std::get<Fsm>(sample("three_writers/property.machine", Role::leader, g));
  const auto p = std::get<Fsm>(buchi_product(a, d));
  CHECK(p.states.size() == 6);
  const std::vector<Action> v{rd(0), rd(1), rd(2)};
  CHECK(accepts_lasso(p, {}, v));
  CHECK_FALSE(accepts_lasso(p, {}, {rd(1)}));
}

TEST_CASE("product with an empty accepting set accepts nothing") {
  ValueDomain g;
  const auto d = sample("three_writers/leader.machine", Role::leader, g);
  const auto a = std::get<Fsm>(sample("three_writers/nothing.machine", Role::leader, g));
  const auto p = std::get<Fsm>(buchi_product(a, d));
  for (std::size_t q = 0; q < p.states.size(); ++q) CHECK_FALSE(p.accepts(static_cast<int>(q)));
}

TEST_CASE("product rejects alphabet mismatch and missing accepting set") {
  Fsm a{{"u"}, 0, {{0, rd(0), 0}}, std::vector<bool>{true}};
  Fsm d{{"q"}, 0, {{0, {Role::contributor, Op::read, 0}, 0}}, std::nullopt};
  CHECK_THROWS_AS(buchi_product(a, d), Error);
  Fsm plain{{"u"}, 0, {}, std::nullopt};
  CHECK_THROWS_AS(buchi_product(plain, Fsm{{"q"}, 0, {}, std::nullopt}), Error);
}

TEST_CASE("product membership equals membership in both factors") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> ns(1, 3), len(0, 6), vlen(1, 6), coin(0, 1);
  int accepted = 0;
  for (int round = 0; round < 100; ++round) {
    const int values = 2;
    Fsm a = random_fsm(rng, Role::leader, ns(rng), values, 8, true);
    Fsm d = random_fsm(rng, Role::leader, ns(rng), values, 8, coin(rng) == 1);
    const auto p = std::get<Fsm>(buchi_product(a, d));
    CHECK(p.states.size() <= a.states.size() * d.states.size() * 2);
    for (int w = 0; w < 5; ++w) {
      std::vector<Action> u(static_cast<std::size_t>(len(rng))), v(static_cast<std::size_t>(vlen(rng)));
      for (auto& x : u) x = random_action(rng, Role::leader, values);
      for (auto& x : v) x = random_action(rng, Role::leader, values);
      const bool both = accepts_lasso(a, u, v) && accepts_lasso(d, u, v);
      CHECK(accepts_lasso(p, u, v) == both);
      accepted += both;
    }
  }
  CHECK(accepted > 0);
}

TEST_CASE("lift_to_pdm keeps every transition as a push and a pop") {
  Fsm f{{"a", "b"}, 0, {{0, rd(0), 1}}, std::nullopt};
  const auto p = lift_to_pdm(f);
  REQUIRE(p.rules.size() == 2);
  LocalConfig c = initial_local(p);
  auto n = apply_local(p, c, 0);
  REQUIRE(n);
  CHECK(n->state == 1);
  CHECK(n->stack.size() == 2);
  CHECK_FALSE(apply_local(p, c, 1));
}

TEST_CASE("popping the bottom is never enabled") {
  Pdm p{{"p"}, {"bot"}, 0, {{0, rd(0), 0, 0, StackOp::pop, -1}}, std::nullopt};
  CHECK_FALSE(apply_local(p, initial_local(p), 0));
}

TEST_CASE("network transition ids are injective") {
  const auto net = sample_network("three_writers", "leader.machine", "contributor.machine", "property.machine");
  std::set<int> ids;
  for (std::size_t i = 0; i < net.leader_transitions(); ++i)
    ids.insert(net.id({Role::leader, static_cast<int>(i)}));
  for (std::size_t i = 0; i < net.contributor_transitions(); ++i)
    ids.insert(net.id({Role::contributor, static_cast<int>(i)}));
  CHECK(ids.size() == net.transition_total());
  for (int id : ids) CHECK(net.id(net.transition(id)) == id);
}
