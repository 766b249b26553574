#pragma once

// Core automata model: read/write alphabets over a finite value domain,
// finite-state and pushdown machines (optionally Büchi), the leader x
// property product, and the (leader, contributor) network.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace paramck {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a configurable state-space or solver cap is hit. Never
/// conflated with an EMPTY verdict.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

enum class Role : std::uint8_t { leader, contributor };
enum class Op : std::uint8_t { read, write };

/// Index into the value domain. `#` (the uninitialized store) is kNoValue
/// and never labels an action.
using Value = int;
inline constexpr Value kNoValue = -1;

struct Action {
  Role role = Role::leader;
  Op op = Op::read;
  Value value = 0;

  friend auto operator<=>(const Action&, const Action&) = default;
};

inline bool enabled(const Action& a, Value store) {
  return a.op == Op::write || a.value == store;
}

/// Store value after executing `a` from `store`.
inline Value store_after(const Action& a, Value store) {
  return a.op == Op::write ? a.value : store;
}

struct ValueDomain {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }

  std::optional<Value> find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Value>(it - names.begin());
  }

  std::string name(Value v) const {
    if (v == kNoValue) return "#";
    return names.at(static_cast<std::size_t>(v));
  }

  friend bool operator==(const ValueDomain&, const ValueDomain&) = default;
};

inline std::string to_string(const Action& a, const ValueDomain& g) {
  std::string s = a.op == Op::read ? "r" : "w";
  s += a.role == Role::leader ? "_d(" : "_c(";
  return s + g.name(a.value) + ")";
}

struct FsmTransition {
  int src = 0;
  Action action;
  int dst = 0;

  friend bool operator==(const FsmTransition&, const FsmTransition&) = default;
};

struct Fsm {
  std::vector<std::string> states;
  int initial = 0;
  std::vector<FsmTransition> transitions;
  /// Present iff the machine is a Büchi automaton.
  std::optional<std::vector<bool>> accepting;

  std::size_t state_count() const { return states.size(); }
  bool is_buchi() const { return accepting.has_value(); }
  /// Without an accepting set every state counts as accepting.
  bool accepts(int s) const {
    return !accepting || (*accepting)[static_cast<std::size_t>(s)];
  }

  friend bool operator==(const Fsm&, const Fsm&) = default;
};

enum class StackOp : std::uint8_t { push, pop };

/// A pushdown rule (src, action, top, dst, effect). A push keeps `top`
/// below the pushed symbol; a pop removes `top`.
struct PdmRule {
  int src = 0;
  Action action;
  int top = 0;
  int dst = 0;
  StackOp op = StackOp::pop;
  int pushed = -1;

  friend bool operator==(const PdmRule&, const PdmRule&) = default;
};

struct Pdm {
  static constexpr int kBottom = 0;

  std::vector<std::string> states;
  /// Symbol 0 is the bottom marker.
  std::vector<std::string> stack_symbols;
  int initial = 0;
  std::vector<PdmRule> rules;
  std::optional<std::vector<bool>> accepting;

  std::size_t state_count() const { return states.size(); }
  bool is_buchi() const { return accepting.has_value(); }
  bool accepts(int s) const {
    return !accepting || (*accepting)[static_cast<std::size_t>(s)];
  }

  friend bool operator==(const Pdm&, const Pdm&) = default;
};

using Machine = std::variant<Fsm, Pdm>;

inline bool is_pdm(const Machine& m) { return std::holds_alternative<Pdm>(m); }

inline std::size_t state_count(const Machine& m) {
  return std::visit([](const auto& x) { return x.state_count(); }, m);
}

inline std::size_t transition_count(const Machine& m) {
  if (auto* f = std::get_if<Fsm>(&m)) return f->transitions.size();
  return std::get<Pdm>(m).rules.size();
}

inline const std::vector<std::string>& state_names(const Machine& m) {
  return std::visit([](const auto& x) -> const std::vector<std::string>& {
    return x.states;
  }, m);
}

inline int initial_state(const Machine& m) {
  return std::visit([](const auto& x) { return x.initial; }, m);
}

inline bool accepts(const Machine& m, int s) {
  return std::visit([s](const auto& x) { return x.accepts(s); }, m);
}

inline bool is_buchi(const Machine& m) {
  return std::visit([](const auto& x) { return x.is_buchi(); }, m);
}

inline Action action_of(const Machine& m, int index) {
  if (auto* f = std::get_if<Fsm>(&m))
    return f->transitions.at(static_cast<std::size_t>(index)).action;
  return std::get<Pdm>(m).rules.at(static_cast<std::size_t>(index)).action;
}

inline int source_of(const Machine& m, int index) {
  if (auto* f = std::get_if<Fsm>(&m))
    return f->transitions.at(static_cast<std::size_t>(index)).src;
  return std::get<Pdm>(m).rules.at(static_cast<std::size_t>(index)).src;
}

inline int target_of(const Machine& m, int index) {
  if (auto* f = std::get_if<Fsm>(&m))
    return f->transitions.at(static_cast<std::size_t>(index)).dst;
  return std::get<Pdm>(m).rules.at(static_cast<std::size_t>(index)).dst;
}

// ---------------------------------------------------------------------------
// Local (per-process) configurations

/// Control state plus stack (bottom first, top at back). The stack is empty
/// for finite-state machines.
struct LocalConfig {
  int state = 0;
  std::vector<int> stack;

  friend auto operator<=>(const LocalConfig&, const LocalConfig&) = default;
};

inline LocalConfig initial_local(const Machine& m) {
  LocalConfig c{initial_state(m), {}};
  if (is_pdm(m)) c.stack.push_back(Pdm::kBottom);
  return c;
}

/// Applies transition/rule `index` to `c` ignoring the store. Returns nullopt
/// if the source state or the top symbol does not match. Popping the bottom
/// marker is never enabled.
inline std::optional<LocalConfig> apply_local(const Machine& m, const LocalConfig& c,
                                              int index) {
  if (auto* f = std::get_if<Fsm>(&m)) {
    const auto& t = f->transitions.at(static_cast<std::size_t>(index));
    if (t.src != c.state) return std::nullopt;
    return LocalConfig{t.dst, c.stack};
  }
  const auto& r = std::get<Pdm>(m).rules.at(static_cast<std::size_t>(index));
  if (r.src != c.state || c.stack.empty() || c.stack.back() != r.top) return std::nullopt;
  LocalConfig next{r.dst, c.stack};
  if (r.op == StackOp::pop) {
    if (r.top == Pdm::kBottom) return std::nullopt;
    next.stack.pop_back();
  } else {
    next.stack.push_back(r.pushed);
  }
  return next;
}

/// Calls fn(index, next) for every transition enabled from `c` under store
/// value `store`, in index order.
template <class Fn>
void for_each_local_move(const Machine& m, const LocalConfig& c, Value store, Fn&& fn) {
  const std::size_t n = transition_count(m);
  for (std::size_t i = 0; i < n; ++i) {
    const int idx = static_cast<int>(i);
    if (!enabled(action_of(m, idx), store)) continue;
    if (auto next = apply_local(m, c, idx)) fn(idx, std::move(*next));
  }
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity : std::uint8_t { warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::error; });
}

namespace detail {

inline void check_states(const std::vector<std::string>& states, int initial,
                         const std::optional<std::vector<bool>>& accepting,
                         std::vector<Diagnostic>& out) {
  if (states.empty()) out.push_back({Severity::error, "machine has no states"});
  std::set<std::string> seen;
  for (const auto& s : states)
    if (!seen.insert(s).second)
      out.push_back({Severity::error, "duplicate state '" + s + "'"});
  if (initial < 0 || static_cast<std::size_t>(initial) >= states.size())
    out.push_back({Severity::error, "initial state is not a declared state"});
  if (accepting && accepting->size() != states.size())
    out.push_back({Severity::error, "accepting set does not match the state list"});
}

inline bool valid_state(int s, std::size_t n) {
  return s >= 0 && static_cast<std::size_t>(s) < n;
}

}  // namespace detail

/// Checks the structural invariants of `m` against the value domain `g`.
/// Never throws; values of `g` that no action uses yield warnings.
inline std::vector<Diagnostic> validate(const Machine& m, const ValueDomain& g) {
  std::vector<Diagnostic> out;
  if (g.size() == 0) out.push_back({Severity::error, "value domain is empty"});
  std::vector<bool> used(g.size(), false);
  auto check_action = [&](const Action& a, const std::string& where) {
    if (a.value < 0 || static_cast<std::size_t>(a.value) >= g.size()) {
      out.push_back({Severity::error, where + ": action value outside the value domain"});
      return;
    }
    used[static_cast<std::size_t>(a.value)] = true;
  };

  if (auto* f = std::get_if<Fsm>(&m)) {
    detail::check_states(f->states, f->initial, f->accepting, out);
    const std::size_t n = f->states.size();
    for (std::size_t i = 0; i < f->transitions.size(); ++i) {
      const auto& t = f->transitions[i];
      const std::string where = "transition " + std::to_string(i);
      if (!detail::valid_state(t.src, n) || !detail::valid_state(t.dst, n))
        out.push_back({Severity::error, where + ": endpoint is not a declared state"});
      check_action(t.action, where);
    }
  } else {
    const auto& p = std::get<Pdm>(m);
    detail::check_states(p.states, p.initial, p.accepting, out);
    const std::size_t n = p.states.size();
    const std::size_t gamma = p.stack_symbols.size();
    if (gamma == 0) out.push_back({Severity::error, "stack alphabet lacks a bottom symbol"});
    for (std::size_t i = 0; i < p.rules.size(); ++i) {
      const auto& r = p.rules[i];
      const std::string where = "rule " + std::to_string(i);
      if (!detail::valid_state(r.src, n) || !detail::valid_state(r.dst, n))
        out.push_back({Severity::error, where + ": endpoint is not a declared state"});
      if (!detail::valid_state(r.top, gamma))
        out.push_back({Severity::error, where + ": top symbol is not in the stack alphabet"});
      if (r.op == StackOp::push) {
        if (r.pushed == Pdm::kBottom)
          out.push_back({Severity::error, where + ": the bottom symbol is never pushed"});
        else if (!detail::valid_state(r.pushed, gamma))
          out.push_back({Severity::error, where + ": pushed symbol is not in the stack alphabet"});
      }
      check_action(r.action, where);
    }
  }

  for (std::size_t v = 0; v < used.size(); ++v)
    if (!used[v]) out.push_back({Severity::warning, "value " + g.names[v] + " unused"});
  return out;
}

// ---------------------------------------------------------------------------
// Leader x property product

namespace detail {

inline bool leader_only(const Machine& m) {
  const std::size_t n = transition_count(m);
  for (std::size_t i = 0; i < n; ++i)
    if (action_of(m, static_cast<int>(i)).role != Role::leader) return false;
  return true;
}

}  // namespace detail

/// Büchi product of the property `a` with the leader `d`. A product state is
/// accepting iff its property component is accepting; when `d` is itself
/// Büchi a phase bit degeneralizes the two acceptance sets. All |Q_A|·|Q_D|
/// (·2) combinations are materialized, reachable or not.
inline Machine buchi_product(const Fsm& a, const Machine& d) {
  if (!a.accepting) throw Error("property automaton has no accepting set");
  if (!detail::leader_only(Machine{a}) || !detail::leader_only(d))
    throw Error("alphabet mismatch: property and leader must both be over leader actions");

  const std::size_t na = a.states.size();
  const std::size_t nd = state_count(d);
  const bool phased = is_buchi(d);
  const std::size_t phases = phased ? 2 : 1;
  auto id = [&](std::size_t qa, std::size_t qd, std::size_t b) {
    return static_cast<int>((qa * nd + qd) * phases + b);
  };
  // Phase 0 waits for the property's accepting set, phase 1 for the leader's.
  auto next_phase = [&](std::size_t qa, std::size_t qd, std::size_t b) -> std::size_t {
    if (!phased) return 0;
    if (b == 0 && a.accepts(static_cast<int>(qa))) return 1;
    if (b == 1 && accepts(d, static_cast<int>(qd))) return 0;
    return b;
  };

  std::vector<std::string> names;
  std::vector<bool> acc;
  const auto& dn = state_names(d);
  for (std::size_t qa = 0; qa < na; ++qa)
    for (std::size_t qd = 0; qd < nd; ++qd)
      for (std::size_t b = 0; b < phases; ++b) {
        std::string n = "(" + a.states[qa] + "," + dn[qd];
        if (phased) n += "," + std::to_string(b);
        names.push_back(n + ")");
        acc.push_back(b == 0 && a.accepts(static_cast<int>(qa)));
      }
  const int init = id(static_cast<std::size_t>(a.initial),
                      static_cast<std::size_t>(initial_state(d)), 0);

  if (auto* f = std::get_if<Fsm>(&d)) {
    Fsm out;
    out.states = std::move(names);
    out.initial = init;
    out.accepting = std::move(acc);
    for (std::size_t qa = 0; qa < na; ++qa)
      for (std::size_t b = 0; b < phases; ++b)
        for (const auto& td : f->transitions)
          for (const auto& ta : a.transitions) {
            if (ta.src != static_cast<int>(qa) || ta.action != td.action) continue;
            const auto nb = next_phase(qa, static_cast<std::size_t>(td.src), b);
            out.transitions.push_back(
                {id(qa, static_cast<std::size_t>(td.src), b), td.action,
                 id(static_cast<std::size_t>(ta.dst), static_cast<std::size_t>(td.dst), nb)});
          }
    return out;
  }

  const auto& p = std::get<Pdm>(d);
  Pdm out;
  out.states = std::move(names);
  out.stack_symbols = p.stack_symbols;
  out.initial = init;
  out.accepting = std::move(acc);
  for (std::size_t qa = 0; qa < na; ++qa)
    for (std::size_t b = 0; b < phases; ++b)
      for (const auto& r : p.rules)
        for (const auto& ta : a.transitions) {
          if (ta.src != static_cast<int>(qa) || ta.action != r.action) continue;
          const auto nb = next_phase(qa, static_cast<std::size_t>(r.src), b);
          PdmRule pr = r;
          pr.src = id(qa, static_cast<std::size_t>(r.src), b);
          pr.dst = id(static_cast<std::size_t>(ta.dst), static_cast<std::size_t>(r.dst), nb);
          out.rules.push_back(pr);
        }
  return out;
}

/// Embeds an FSM as a PDM over {bottom, "lift"}: every transition becomes a
/// push of "lift" on the bottom and a pop of "lift". Languages coincide and
/// the stack never exceeds height 2.
inline Pdm lift_to_pdm(const Fsm& f) {
  Pdm p;
  p.states = f.states;
  p.stack_symbols = {"bot", "lift"};
  p.initial = f.initial;
  p.accepting = f.accepting;
  for (const auto& t : f.transitions) {
    p.rules.push_back({t.src, t.action, Pdm::kBottom, t.dst, StackOp::push, 1});
    p.rules.push_back({t.src, t.action, 1, t.dst, StackOp::pop, -1});
  }
  return p;
}

inline Pdm as_pdm(const Machine& m) {
  if (auto* f = std::get_if<Fsm>(&m)) return lift_to_pdm(*f);
  return std::get<Pdm>(m);
}

// ---------------------------------------------------------------------------
// Networks and transition identities

/// Identity of a transition (FSM transition or PDM rule) of the leader or of
/// the contributor. `id()` is injective over both machines: leader
/// transitions come first.
struct Transition {
  Role owner = Role::leader;
  int index = 0;

  friend auto operator<=>(const Transition&, const Transition&) = default;
};

/// A (leader, contributor) network. The leader is the Büchi product of the
/// leader machine and the property; the contributor is never Büchi.
struct Network {
  ValueDomain values;
  Machine leader;
  Machine contributor;

  std::size_t leader_transitions() const { return transition_count(leader); }
  std::size_t contributor_transitions() const { return transition_count(contributor); }
  std::size_t transition_total() const { return leader_transitions() + contributor_transitions(); }

  int id(Transition t) const {
    return t.owner == Role::leader ? t.index
                                   : static_cast<int>(leader_transitions()) + t.index;
  }

  Transition transition(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= transition_total())
      throw Error("transition id " + std::to_string(id) + " out of range");
    const int nl = static_cast<int>(leader_transitions());
    if (id < nl) return {Role::leader, id};
    return {Role::contributor, id - nl};
  }

  const Machine& machine(Role r) const { return r == Role::leader ? leader : contributor; }

  Action action(Transition t) const { return action_of(machine(t.owner), t.index); }
};

}  // namespace paramck
