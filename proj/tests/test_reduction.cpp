#include <catch_amalgamated.hpp>

#include <random>

#include "paramck/reduction.hpp"
#include "support.hpp"

using namespace paramck;
using namespace paramck::testing;

namespace {

RunPrefix three_rule_run() { return {three_rule_pdm(), three_rule_sequence(), std::nullopt}; }

Distribution with_children(const std::vector<std::vector<std::size_t>>& psi) {
  Distribution d;
  d.parent = three_rule_run();
  for (const auto& m : psi) {
    RunPrefix c{three_rule_pdm(), {}, std::nullopt};
    for (std::size_t p : m) c.rules.push_back(d.parent.rules[p - 1]);
    d.children.push_back(c);
  }
  d.psi = psi;
  return d;
}

Distribution dist_r() { return with_children({{1, 6}, {1, 2, 5}, {1, 3, 4}}); }
Distribution dist_s() { return with_children({{1, 4}, {1, 2, 4, 5}, {1, 3, 5, 6}}); }

std::vector<Action> word_of(const Pdm& p, const std::vector<int>& rules) {
  std::vector<Action> w;
  for (int r : rules) w.push_back(p.rules[static_cast<std::size_t>(r)].action);
  return w;
}

// Whether `restriction` has a path labelled `w`.
bool restriction_accepts(const Restriction& r, const std::vector<Action>& w) {
  std::set<int> cur{r.fsm.initial};
  for (const auto& a : w) {
    std::set<int> next;
    for (const auto& t : r.fsm.transitions)
      if (cur.count(t.src) && t.action == a) next.insert(t.dst);
    cur = std::move(next);
  }
  return !cur.empty();
}

// A random legal run of up to `len` rules.
std::vector<int> random_run(std::mt19937& rng, const Pdm& p, std::size_t len) {
  std::vector<int> rules;
  LocalConfig c = initial_local(p);
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<int> enabled;
    for (std::size_t r = 0; r < p.rules.size(); ++r)
      if (apply_local(p, c, static_cast<int>(r))) enabled.push_back(static_cast<int>(r));
    if (enabled.empty()) break;
    const int r = enabled[std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng)];
    c = *apply_local(p, c, r);
    rules.push_back(r);
  }
  return rules;
}

}  // namespace

TEST_CASE("effective stack heights of the three-rule run") {
  const auto run = three_rule_run();
  CHECK(esh_profile(run, 7) == std::vector<int>{1, 2, 3, 4, 3, 2, 1});
  CHECK(effective_stack_height(run, 3) == 4);
  CHECK_THROWS_AS(effective_stack_height(run, 7), Error);
}

TEST_CASE("effective stack heights of lassos") {
  SECTION("push-only") {
    RunPrefix run{three_rule_pdm(), {0, 1}, RunPrefix::Lasso{1, 1}};
    REQUIRE_FALSE(run_error(run));
    CHECK(esh_profile(run, 10) == std::vector<int>(10, 1));
  }
  SECTION("push and pop alternating") {
    RunPrefix run{three_rule_pdm(), {0, 2}, RunPrefix::Lasso{0, 2}};
    REQUIRE_FALSE(run_error(run));
    CHECK(esh_profile(run, 9) == std::vector<int>{1, 2, 1, 2, 1, 2, 1, 2, 1});
  }
  SECTION("growing cycle") {
    // Heights 1 2 3 4 3 4 5 4 ...
    RunPrefix run{three_rule_pdm(), {0, 1, 1, 2}, RunPrefix::Lasso{1, 3}};
    REQUIRE_FALSE(run_error(run));
    CHECK(esh_profile(run, 8) == std::vector<int>{1, 1, 1, 2, 1, 1, 2, 1});
  }
}

TEST_CASE("lasso legality") {
  CHECK(run_error({three_rule_pdm(), {0, 2}, RunPrefix::Lasso{1, 1}}));  // pops below the cycle start
  CHECK(run_error({three_rule_pdm(), {0, 2}, RunPrefix::Lasso{0, 1}}));  // lengths disagree
  CHECK(run_error({three_rule_pdm(), {2}, std::nullopt}));                // pop of bot
  CHECK_FALSE(run_error({three_rule_pdm(), {0, 1, 2}, RunPrefix::Lasso{1, 2}}));
  // The cycle reads the symbol below its start: it pops then pushes a
  // different symbol, so the second iteration finds the wrong top.
  Pdm p{{"p"},
        {"bot", "A", "B"},
        0,
        {{0, {Role::contributor, Op::write, 0}, Pdm::kBottom, 0, StackOp::push, 1},
         {0, {Role::contributor, Op::write, 0}, 1, 0, StackOp::push, 1},
         {0, {Role::contributor, Op::write, 0}, 1, 0, StackOp::pop, -1},
         {0, {Role::contributor, Op::write, 0}, Pdm::kBottom, 0, StackOp::push, 2}},
        std::nullopt};
  CHECK(run_error({p, {0, 2, 3}, RunPrefix::Lasso{1, 2}}));
}

TEST_CASE("every lasso period has a position of effective stack height 1") {
  std::mt19937 rng(5);
  int lassos = 0;
  for (int round = 0; round < 200; ++round) {
    const auto p = random_pdm(rng, Role::contributor, 2, 3, 1, 6, false);
    const auto rules = random_run(rng, p, 12);
    for (std::size_t e = 1; e <= rules.size(); ++e)
      for (std::size_t s = 0; s < e; ++s) {
        RunPrefix run{p, {rules.begin(), rules.begin() + static_cast<std::ptrdiff_t>(e)}, RunPrefix::Lasso{s, e - s}};
        if (run_error(run)) continue;
        ++lassos;
        const auto prof = esh_profile(run, s + 4 * (e - s));
        for (int period = 0; period < 4; ++period) {
          const auto from = prof.begin() + static_cast<std::ptrdiff_t>(s + static_cast<std::size_t>(period) * (e - s));
          CHECK(std::find(from, from + static_cast<std::ptrdiff_t>(e - s), 1) != from + static_cast<std::ptrdiff_t>(e - s));
        }
      }
  }
  CHECK(lassos > 50);
}

TEST_CASE("k-restriction") {
  SECTION("pushes truncate the window") {
    const auto r = restrict(three_rule_pdm(), 2);
    CHECK(r.fsm.states.size() == 4);  // [bot] [alpha.bot] [alpha.alpha] [alpha]
    int aa = -1;
    for (std::size_t i = 0; i < r.windows.size(); ++i)
      if (r.windows[i].second == std::vector<int>{1, 1}) aa = static_cast<int>(i);
    REQUIRE(aa >= 0);
    bool self = false;
    for (std::size_t t = 0; t < r.fsm.transitions.size(); ++t)
      if (r.fsm.transitions[t].src == aa && r.rule_of[t] == 1) self = r.fsm.transitions[t].dst == aa;
    CHECK(self);
    CHECK(r.fsm.states[static_cast<std::size_t>(aa)] == "p[alpha.alpha]");
  }
  SECTION("window 1 has no pops") {
    const auto r = restrict(three_rule_pdm(), 1);
    for (int rule : r.rule_of) CHECK(rule != 2);
  }
  SECTION("no rules") {
    const Pdm p{{"p", "q"}, {"bot"}, 0, {}, std::nullopt};
    const auto r = restrict(p, 3);
    CHECK(r.fsm.states.size() == 1);
    CHECK(r.fsm.transitions.empty());
  }
  SECTION("state count bound and budget") {
    std::mt19937 rng(9);
    for (int round = 0; round < 40; ++round) {
      const auto p = random_pdm(rng, Role::contributor, 3, 3, 2, 8, round % 2 == 0);
      for (int k = 1; k <= 4; ++k) {
        const auto r = restrict(p, k);
        const std::size_t g = p.stack_symbols.size();
        std::size_t geo = 0, pw = 1;
        for (int i = 0; i <= k; ++i, pw *= g) geo += pw;
        CHECK(r.fsm.states.size() <= p.states.size() * (geo - 1));
        CHECK_FALSE(has_errors(validate(r.fsm, value_domain(2))));
        CHECK(r.fsm.accepting.has_value() == p.accepting.has_value());
      }
    }
    CHECK_THROWS_AS(restrict(three_rule_pdm(), 50, 10), BudgetExceeded);
  }
}

TEST_CASE("bounded runs agree with the restriction") {
  const auto p = three_rule_pdm();
  const auto w = word_of(p, three_rule_sequence());
  CHECK(restriction_accepts(restrict(p, 4), w));
  CHECK_FALSE(restriction_accepts(restrict(p, 3), w));
  CHECK(kbounded_agreement(p, 4, 6).holds);
  CHECK(kbounded_agreement(p, 3, 6).holds);
  Pdm push_only = p;
  push_only.rules.pop_back();
  CHECK(kbounded_agreement(push_only, 1, 8).holds);

  std::mt19937 rng(13);
  for (int round = 0; round < 20; ++round) {
    const auto q = random_pdm(rng, Role::contributor, 1 + round % 3, 1 + round % 2 + 1, 2, 6, false);
    for (int k = 1; k <= 4; ++k) {
      const auto res = kbounded_agreement(q, k, 6);
      INFO("round " << round << " k " << k);
      CHECK(res.holds);
    }
  }
}

TEST_CASE("restriction bound") {
  CHECK(compute_N(Pdm{{"p"}, {"bot"}, 0, {}, std::nullopt}) == 3);
  CHECK(compute_N(Pdm{{"p"}, {"bot", "A"}, 0, {}, std::nullopt}) == 5);
  CHECK(compute_N(Pdm{{"p", "q"}, {"bot"}, 0, {}, std::nullopt}) == 9);
}

TEST_CASE("distributions of the three-rule run") {
  const auto r = dist_r();
  CHECK(validate_distribution(r));
  CHECK(is_bounded(r, 6, 2));
  CHECK_FALSE(is_bounded(r, 6, 1));
  CHECK_FALSE(is_synchronized(r));

  const auto s = dist_s();
  CHECK(validate_distribution(s));
  CHECK(is_bounded(s, 6, 3));
  CHECK_FALSE(is_bounded(s, 6, 2));
  CHECK(is_synchronized(s));

  auto broken = dist_r();
  broken.psi[0][1] = 5;
  const auto check = validate_distribution(broken);
  CHECK_FALSE(check);
  CHECK(check.reason == "parent position 6 is not covered");

  Distribution id{three_rule_run(), {three_rule_run()}, {{1, 2, 3, 4, 5, 6}}};
  CHECK(validate_distribution(id));
  CHECK(is_synchronized(id));

  auto mismatch = dist_r();
  mismatch.psi[1] = {1, 4, 5};  // child rule 2 is r_b, parent rule 4 is r_c
  CHECK(validate_distribution(mismatch).reason == "child 2 position 2 maps to a different rule");
  auto unordered = dist_r();
  unordered.children[2].rules = {0, 1, 2};
  unordered.psi[2] = {1, 3, 3};
  CHECK(validate_distribution(unordered).reason == "child 3 position 3 breaks strict monotonicity");
  auto illegal = dist_r();
  illegal.children[0].rules = {2};
  illegal.psi[0] = {6};
  CHECK_FALSE(validate_distribution(illegal));
}

TEST_CASE("flattening the three-rule run") {
  const auto d = flatten_run(three_rule_run(), 3, 3);
  REQUIRE(d.children.size() == 2);
  CHECK(validate_distribution(d));
  CHECK(is_bounded(d, 3, 3));
  CHECK(is_synchronized(d));
  CHECK(d.psi[0] == std::vector<std::size_t>{1, 3, 4, 5});
  CHECK(d.psi[1] == std::vector<std::size_t>{1, 2, 4, 6});

  CHECK_THROWS_AS(flatten_run(three_rule_run(), 3), Error);     // N = 5: already bounded
  CHECK_THROWS_AS(flatten_run(three_rule_run(), 2, 2), Error);  // position 2 is not the first
  CHECK_THROWS_AS(flatten_run(three_rule_run(), 4, 3), Error);
}

TEST_CASE("flattening random runs") {
  std::mt19937 rng(17);
  int split = 0;
  for (int round = 0; round < 400; ++round) {
    const auto p = random_pdm(rng, Role::contributor, 1 + round % 2, 2 + round % 2, 1, 6, false);
    const auto rules = random_run(rng, p, 40);
    const RunPrefix run{p, rules, std::nullopt};
    const auto prof = esh_profile(run, rules.size() + 1);
    for (std::size_t n : {compute_N(p), std::size_t{3}, std::size_t{4}}) {
      std::size_t z = 0;
      while (z < prof.size() && static_cast<std::size_t>(prof[z]) <= n) ++z;
      if (z == prof.size() || static_cast<std::size_t>(prof[z]) != n + 1) continue;
      Distribution d;
      try {
        d = flatten_run(run, z, n);
      } catch (const Error&) {
        CHECK(n < compute_N(p));  // only a too-small bound may lack a triple
        continue;
      }
      ++split;
      INFO("round " << round << " n " << n << " z " << z);
      CHECK(validate_distribution(d));
      CHECK(is_bounded(d, z, static_cast<int>(n)));
      CHECK(is_synchronized(d));
    }
  }
  CHECK(split > 20);
}

TEST_CASE("pushdown contributors") {
  SECTION("a writer that pushes feeds a reading leader") {
    Pdm c = three_rule_pdm();
    for (auto& r : c.rules) r.action = {Role::contributor, Op::write, 0};
    Network net;
    net.values = value_domain(1);
    net.leader = lift_to_pdm(Fsm{{"q"}, 0, {{0, {Role::leader, Op::read, 0}, 0}}, std::vector<bool>{true}});
    net.contributor = c;
    const auto res = check_pdm_pdm(net);
    REQUIRE(res.verdict == Verdict::nonempty);
    CHECK(res.stats.restriction_bound == 5);
    CHECK(replay(restricted_network(net), *res.witness));
    ExplicitOptions opts;
    opts.stack_bound = 6;
    CHECK(check_explicit(net, 1, opts).verdict == Verdict::nonempty);
  }
  SECTION("a write behind a pop of bot never happens") {
    Network net;
    net.values = value_domain(1);
    net.leader = lift_to_pdm(Fsm{{"q"}, 0, {{0, {Role::leader, Op::read, 0}, 0}}, std::vector<bool>{true}});
    net.contributor = Pdm{{"c"}, {"bot"}, 0, {{0, {Role::contributor, Op::write, 0}, Pdm::kBottom, 0, StackOp::pop, -1}},
                          std::nullopt};
    CHECK(check_pdm_pdm(net).verdict == Verdict::empty);
  }
  SECTION("restriction over budget reports N") {
    Network net;
    net.values = value_domain(1);
    net.leader = lift_to_pdm(Fsm{{"q"}, 0, {}, std::vector<bool>{true}});
    net.contributor = three_rule_pdm();
    SymbolicOptions opts;
    opts.restriction_budget = 3;
    const auto res = check_pdm_pdm(net, opts);
    CHECK(res.verdict == Verdict::budget);
    CHECK(res.note.find("N = 5") != std::string::npos);
  }
}

TEST_CASE("lifted contributors agree with finite-state contributors") {
  std::mt19937 rng(23);
  for (int round = 0; round < 40; ++round) {
    auto net = random_fsm_network(rng);
    net.leader = as_pdm(net.leader);
    const auto a = check_pdm_fsm(net);
    Network lifted{net.values, net.leader, as_pdm(net.contributor)};
    const auto b = check_pdm_pdm(lifted);
    INFO("round " << round);
    CHECK(a.verdict == b.verdict);
    if (b.verdict == Verdict::nonempty) CHECK(replay(restricted_network(lifted), *b.witness));
  }
}

TEST_CASE("pushdown/pushdown verdicts against bounded explicit search") {
  std::mt19937 rng(31);
  int nonempty = 0;
  for (int round = 0; round < 15; ++round) {
    const auto net = random_pdm_network(rng);
    const auto res = check_pdm_pdm(net);
    INFO("round " << round);
    REQUIRE(res.verdict != Verdict::budget);
    if (res.verdict == Verdict::nonempty) {
      ++nonempty;
      CHECK(replay(restricted_network(net), *res.witness));
    } else {
      ExplicitOptions opts;
      opts.stack_bound = 6;
      for (int k = 1; k <= 2; ++k) CHECK(check_explicit(net, k, opts).verdict == Verdict::empty);
    }
  }
  CHECK(nonempty > 0);
}
