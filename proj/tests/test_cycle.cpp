#include <catch_amalgamated.hpp>

#include <chrono>
#include <random>

#include "paramck/cycle_search.hpp"
#include "support.hpp"

using namespace paramck;
using namespace paramck::testing;

namespace {

Network three_writers(const std::string& property = "property.machine") {
  return sample_network("three_writers", "leader.machine", "contributor.machine", property);
}
Network single_write() { return sample_network("single_write", "leader.machine", "contributor.machine", "property.machine"); }

Network leader_loop() {
  Network net;
  net.values = value_domain(1);
  net.leader = Fsm{{"q"}, 0, {{0, {Role::leader, Op::write, 0}, 0}}, std::vector<bool>{true}};
  net.contributor = Fsm{{"c"}, 0, {}, std::nullopt};
  return net;
}

}  // namespace

TEST_CASE("cycle automaton of the single-write contributor") {
  const auto net = single_write();
  const auto g = reachable_abstract(net);
  const auto& a = g.configs[1];
  const auto c = build_cycle_fsa(net, a);
  CHECK(c.fsa.states == 1);
  REQUIRE(c.fsa.edges.size() == 1);
  CHECK(c.fsa.edges[0].src == 0);
  CHECK(c.fsa.edges[0].dst == 0);
  CHECK(c.fsa.edges[0].letter == net.id({Role::contributor, 0}));
  CHECK_FALSE(solve(realizability_system(net, c).system));
}

TEST_CASE("cycle automaton with a dead end keeps only the empty word") {
  const auto net = single_write();
  const auto c = build_cycle_fsa(net, initial_abstract(net));
  CHECK(c.fsa.states == 1);
  CHECK(c.fsa.edges.empty());
  CHECK_FALSE(solve(realizability_system(net, c).system));
}

TEST_CASE("three-writer network full-Q cycle automaton is strongly connected and uses the leader loop") {
  const auto net = three_writers();
  const auto g = reachable_abstract(net);
  const AbstractConfig* full = nullptr;
  for (const auto& a : g.configs)
    if (a.q.size() == 7 && accepts(net.leader, a.leader)) {
      full = &a;
      break;
    }
  REQUIRE(full);
  const auto c = build_cycle_fsa(net, *full);
  std::set<int> leader_letters;
  for (const auto& e : c.fsa.edges)
    if (net.transition(e.letter).owner == Role::leader) leader_letters.insert(e.letter);
  // Leader transitions of the product whose source is reachable.
  std::set<int> reachable_leader;
  for (const auto& a : g.configs)
    for (const auto& [t, b] : abstract_successors(net, a))
      if (t.owner == Role::leader) reachable_leader.insert(net.id(t));
  CHECK(leader_letters == reachable_leader);
  for (int s = 0; s < c.fsa.states; ++s) {
    Fsa rooted = c.fsa;
    rooted.initial = s;
    CHECK(detail::returns_to_initial(rooted));
  }
  const auto ps = realizability_system(net, c);
  const auto sol = solve(ps.system);
  REQUIRE(sol);
  const auto w = concretize(net, c, ps, g.stem_to(static_cast<int>(full - g.configs.data())), *sol);
  CHECK(replay(net, w));
  CHECK(w.k <= 7 * static_cast<int>(w.cycle.size()) * 8);
}

TEST_CASE("three-writer network is nonempty and the witness replays") {
  const auto start = std::chrono::steady_clock::now();
  const auto net = three_writers();
  const auto r = check_fsm_fsm(net);
  REQUIRE(r.verdict == Verdict::nonempty);
  REQUIRE(r.witness);
  CHECK(replay(net, *r.witness));
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
}

TEST_CASE("single-write contributor is empty") { CHECK(check_fsm_fsm(single_write()).verdict == Verdict::empty); }

TEST_CASE("property accepting nothing is empty") {
  CHECK(check_fsm_fsm(three_writers("nothing.machine")).verdict == Verdict::empty);
}

TEST_CASE("leader self-loop needs a single contributor") {
  const auto net = leader_loop();
  const auto r = check_fsm_fsm(net);
  REQUIRE(r.verdict == Verdict::nonempty);
  CHECK(r.witness->k == 1);
  CHECK(r.witness->cycle.size() == 1);
  CHECK(replay(net, *r.witness));
}

TEST_CASE("doubled solutions still concretize") {
  const auto net = three_writers();
  const auto g = reachable_abstract(net);
  for (std::size_t i = 0; i < g.configs.size(); ++i) {
    const auto& a = g.configs[i];
    if (!accepts(net.leader, a.leader)) continue;
    const auto c = build_cycle_fsa(net, a);
    const auto ps = realizability_system(net, c);
    auto sol = solve(ps.system);
    if (!sol) continue;
    for (auto& x : *sol) x *= 2;
    // Depth variables are not scaled; the edge multiset is what matters.
    const auto w = concretize(net, c, ps, g.stem_to(static_cast<int>(i)), *sol);
    CHECK(replay(net, w));
    break;
  }
}

TEST_CASE("symbolic verdicts agree with the explicit oracle on random nets") {
  std::mt19937 rng(99);
  int nonempty = 0;
  for (int round = 0; round < 60; ++round) {
    const auto net = random_fsm_network(rng);
    const auto r = check_fsm_fsm(net);
    REQUIRE(r.verdict != Verdict::budget);
    if (r.verdict == Verdict::nonempty) {
      ++nonempty;
      CHECK(replay(net, *r.witness));
    } else {
      for (int k = 1; k <= 4; ++k) CHECK(check_explicit(net, k).verdict == Verdict::empty);
    }
  }
  CHECK(nonempty > 0);
}
