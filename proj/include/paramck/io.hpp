#pragma once

// Text formats: machine files and witness files.
//
// Machine file (line oriented, `#` starts a comment):
//
//   kind = fsm | pdm | buchi-fsm | buchi-pdm
//   values = 1 2 3
//   states = q0 q1
//   initial = q0
//   accepting = q1               (buchi kinds)
//   stack = bot A                (pdm kinds; first symbol is the bottom)
//   trans = q0 w(1) q1           (fsm kinds)
//   rule = q0 r(1) A -> q1 push A
//   rule = q1 w(2) A -> q0 pop
//
// Witness file: see write_witness.

#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "explicit_engine.hpp"
#include "machines.hpp"

namespace paramck {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& msg)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> ds)
      : Error(join(ds)), diagnostics_(std::move(ds)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& ds) {
    std::string s;
    for (const auto& d : ds) {
      if (d.severity != Severity::error) continue;
      if (!s.empty()) s += "; ";
      s += d.message;
    }
    return s;
  }
  std::vector<Diagnostic> diagnostics_;
};

namespace detail {

struct Token {
  std::string text;
  std::size_t column;
};

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

inline int index_of(const std::vector<std::string>& names, const std::string& n) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == n) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

/// Parses one machine file. Actions get `role`; values declared by the file
/// are appended to `g` if new. Throws ParseError or ValidationError.
inline Machine parse_machine(std::string_view text, Role role, ValueDomain& g) {
  std::map<std::string, std::size_t> seen;
  std::optional<std::string> kind;
  std::vector<std::string> states, stack, values;
  std::optional<std::string> initial;
  std::optional<std::vector<std::string>> accepting;
  struct RawTrans {
    std::size_t line;
    std::vector<detail::Token> toks;
  };
  std::vector<RawTrans> trans, rules;
  std::size_t accepting_line = 0, initial_line = 0;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 2 || toks[1].text != "=")
      throw ParseError(lineno, toks[0].column, "expected `key = ...`");
    const std::string key = toks[0].text;
    std::vector<detail::Token> rest(toks.begin() + 2, toks.end());
    auto words = [&] {
      std::vector<std::string> w;
      for (const auto& t : rest) w.push_back(t.text);
      return w;
    };
    if (key == "trans") {
      trans.push_back({lineno, rest});
      continue;
    }
    if (key == "rule") {
      rules.push_back({lineno, rest});
      continue;
    }
    if (!seen.emplace(key, lineno).second)
      throw ParseError(lineno, toks[0].column, "duplicate `" + key + " =`");
    if (key == "kind") {
      if (rest.size() != 1) throw ParseError(lineno, toks[0].column, "kind takes one word");
      kind = rest[0].text;
      if (*kind != "fsm" && *kind != "pdm" && *kind != "buchi-fsm" && *kind != "buchi-pdm")
        throw ParseError(lineno, rest[0].column, "unknown kind `" + *kind + "`");
    } else if (key == "values") {
      values = words();
    } else if (key == "states") {
      states = words();
    } else if (key == "initial") {
      if (rest.size() != 1) throw ParseError(lineno, toks[0].column, "initial takes one state");
      initial = rest[0].text;
      initial_line = lineno;
    } else if (key == "accepting") {
      accepting = words();
      accepting_line = lineno;
    } else if (key == "stack") {
      stack = words();
    } else {
      throw ParseError(lineno, toks[0].column, "unknown key `" + key + "`");
    }
  }

  if (!kind) throw ParseError(lineno, 1, "missing `kind =`");
  if (!initial) throw ParseError(lineno, 1, "missing `initial =`");
  const bool pdm = *kind == "pdm" || *kind == "buchi-pdm";
  const bool buchi = *kind == "buchi-fsm" || *kind == "buchi-pdm";
  if (buchi && !accepting) throw ParseError(lineno, 1, "buchi kinds need `accepting =`");
  if (!buchi && accepting) throw ParseError(accepting_line, 1, "`accepting =` needs a buchi kind");
  if (pdm && stack.empty()) throw ParseError(lineno, 1, "pdm kinds need `stack =`");
  if (!pdm && !stack.empty()) throw ParseError(seen["stack"], 1, "`stack =` needs a pdm kind");
  if (pdm && !trans.empty()) throw ParseError(trans.front().line, 1, "pdm kinds use `rule =`");
  if (!pdm && !rules.empty()) throw ParseError(rules.front().line, 1, "fsm kinds use `trans =`");

  for (const auto& v : values)
    if (!g.find(v)) g.names.push_back(v);

  auto state = [&](const detail::Token& t, std::size_t line) {
    const int s = detail::index_of(states, t.text);
    if (s < 0) throw ParseError(line, t.column, "undeclared state `" + t.text + "`");
    return s;
  };
  auto symbol = [&](const detail::Token& t, std::size_t line) {
    const int s = detail::index_of(stack, t.text);
    if (s < 0) throw ParseError(line, t.column, "undeclared stack symbol `" + t.text + "`");
    return s;
  };
  auto action = [&](const detail::Token& t, std::size_t line) {
    const auto& s = t.text;
    if (s.size() < 4 || (s[0] != 'r' && s[0] != 'w') || s[1] != '(' || s.back() != ')')
      throw ParseError(line, t.column, "expected r(value) or w(value)");
    const std::string v = s.substr(2, s.size() - 3);
    if (detail::index_of(values, v) < 0)
      throw ParseError(line, t.column + 2, "value `" + v + "` not declared in this file");
    return Action{role, s[0] == 'r' ? Op::read : Op::write, *g.find(v)};
  };

  const int init = detail::index_of(states, *initial);
  if (init < 0) throw ParseError(initial_line, 1, "undeclared initial state `" + *initial + "`");
  std::optional<std::vector<bool>> acc;
  if (accepting) {
    acc.emplace(states.size(), false);
    for (const auto& a : *accepting) {
      const int s = detail::index_of(states, a);
      if (s < 0) throw ParseError(accepting_line, 1, "undeclared accepting state `" + a + "`");
      (*acc)[static_cast<std::size_t>(s)] = true;
    }
  }

  Machine m;
  if (!pdm) {
    Fsm f{states, init, {}, acc};
    for (const auto& t : trans) {
      if (t.toks.size() != 3) throw ParseError(t.line, 1, "expected `trans = src action dst`");
      f.transitions.push_back({state(t.toks[0], t.line), action(t.toks[1], t.line),
                               state(t.toks[2], t.line)});
    }
    m = std::move(f);
  } else {
    Pdm p{states, stack, init, {}, acc};
    for (const auto& r : rules) {
      const auto& k = r.toks;
      if (k.size() < 6 || k[3].text != "->")
        throw ParseError(r.line, 1, "expected `rule = src action top -> dst push X | pop`");
      PdmRule pr{state(k[0], r.line), action(k[1], r.line), symbol(k[2], r.line),
                 state(k[4], r.line), StackOp::pop, -1};
      if (k[5].text == "pop" && k.size() == 6) {
        pr.op = StackOp::pop;
      } else if (k[5].text == "push" && k.size() == 7) {
        pr.op = StackOp::push;
        pr.pushed = symbol(k[6], r.line);
      } else {
        throw ParseError(r.line, k[5].column, "expected `pop` or `push X`");
      }
      p.rules.push_back(pr);
    }
    m = std::move(p);
  }

  // Validate against the values this file declares.
  ValueDomain local;
  std::vector<Value> remap(g.size(), kNoValue);
  for (const auto& v : values) {
    remap[static_cast<std::size_t>(*g.find(v))] = static_cast<Value>(local.size());
    local.names.push_back(v);
  }
  Machine probe = m;
  auto relabel = [&](Action& a) { a.value = remap[static_cast<std::size_t>(a.value)]; };
  if (auto* f = std::get_if<Fsm>(&probe))
    for (auto& t : f->transitions) relabel(t.action);
  else
    for (auto& r : std::get<Pdm>(probe).rules) relabel(r.action);
  auto ds = validate(probe, local);
  if (has_errors(ds)) throw ValidationError(std::move(ds));
  return m;
}

/// Inverse of parse_machine: declares every value of `g`.
inline std::string print_machine(const Machine& m, const ValueDomain& g) {
  std::ostringstream os;
  const bool pdm = is_pdm(m);
  os << "kind = " << (is_buchi(m) ? "buchi-" : "") << (pdm ? "pdm" : "fsm") << "\n";
  os << "values =";
  for (const auto& v : g.names) os << " " << v;
  os << "\nstates =";
  for (const auto& s : state_names(m)) os << " " << s;
  os << "\ninitial = " << state_names(m)[static_cast<std::size_t>(initial_state(m))] << "\n";
  auto act = [&](const Action& a) {
    return std::string(a.op == Op::read ? "r(" : "w(") + g.name(a.value) + ")";
  };
  const auto& names = state_names(m);
  auto nm = [&](int s) { return names[static_cast<std::size_t>(s)]; };
  if (is_buchi(m)) {
    os << "accepting =";
    for (std::size_t s = 0; s < names.size(); ++s)
      if (accepts(m, static_cast<int>(s))) os << " " << names[s];
    os << "\n";
  }
  if (auto* f = std::get_if<Fsm>(&m)) {
    for (const auto& t : f->transitions)
      os << "trans = " << nm(t.src) << " " << act(t.action) << " " << nm(t.dst) << "\n";
  } else {
    const auto& p = std::get<Pdm>(m);
    os << "stack =";
    for (const auto& s : p.stack_symbols) os << " " << s;
    os << "\n";
    for (const auto& r : p.rules) {
      os << "rule = " << nm(r.src) << " " << act(r.action) << " "
         << p.stack_symbols[static_cast<std::size_t>(r.top)] << " -> " << nm(r.dst);
      if (r.op == StackOp::pop) os << " pop\n";
      else os << " push " << p.stack_symbols[static_cast<std::size_t>(r.pushed)] << "\n";
    }
  }
  return os.str();
}

/// Parses leader, contributor and property files over one shared value
/// domain and forms the network with the leader replaced by its product
/// with the property. Values used by no machine are reported in `warnings`.
inline Network build_network(std::string_view leader, std::string_view contributor,
                             std::string_view property, std::vector<Diagnostic>* warnings = nullptr) {
  Network net;
  auto wrap = [](const char* what, auto&& fn) {
    try {
      return fn();
    } catch (const ParseError& e) {
      throw ParseError(e.line(), e.column(), std::string(what) + " file: " + e.what());
    }
  };
  Machine d = wrap("leader", [&] { return parse_machine(leader, Role::leader, net.values); });
  Machine c = wrap("contributor", [&] { return parse_machine(contributor, Role::contributor, net.values); });
  Machine a = wrap("property", [&] { return parse_machine(property, Role::leader, net.values); });
  if (is_buchi(c)) throw Error("contributor file: contributors have no accepting set");
  const auto* af = std::get_if<Fsm>(&a);
  if (!af || !af->accepting) throw Error("property file: the property must be a buchi-fsm");
  net.leader = buchi_product(*af, d);
  net.contributor = std::move(c);
  if (warnings) {
    std::vector<bool> used(net.values.size(), false);
    for (const Machine* m : {&d, &net.contributor}) {
      for (std::size_t i = 0; i < transition_count(*m); ++i)
        used[static_cast<std::size_t>(action_of(*m, static_cast<int>(i)).value)] = true;
    }
    for (std::size_t v = 0; v < used.size(); ++v)
      if (!used[v])
        warnings->push_back({Severity::warning, "value " + net.values.names[v] +
                                                    " is used by neither leader nor contributor"});
  }
  return net;
}

// ---------------------------------------------------------------------------
// Witness files
//
//   paramck-witness 1
//   mode <mode>
//   k <contributors>
//   pivot <state-index> <symbol-index>     (pushdown leaders only)
//   stem
//   <actor> <transition-id>                (zero or more)
//   cycle
//   <actor> <transition-id>                (one or more)
//   end
//
// Actor 0 is the leader. Transition ids number the leader's transitions
// (or rules) first, then the contributor's.

inline std::string write_witness(const Network& net, const Witness& w, const std::string& mode) {
  std::ostringstream os;
  os << "paramck-witness 1\nmode " << mode << "\nk " << w.k << "\n";
  if (w.pivot) os << "pivot " << w.pivot->state << " " << w.pivot->symbol << "\n";
  os << "stem\n";
  for (const auto& s : w.stem) os << s.actor << " " << net.id(s.transition) << "\n";
  os << "cycle\n";
  for (const auto& s : w.cycle) os << s.actor << " " << net.id(s.transition) << "\n";
  os << "end\n";
  return os.str();
}

struct WitnessFile {
  std::string mode;
  int k = 1;
  std::optional<Pivot> pivot;
  std::vector<std::pair<int, int>> stem, cycle;  // (actor, transition id)
};

inline WitnessFile parse_witness(std::string_view text) {
  std::vector<std::vector<detail::Token>> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    lines.push_back(detail::tokenize(line));
  }
  std::size_t i = 0;
  auto next = [&]() -> std::vector<detail::Token>& {
    while (i < lines.size() && lines[i].empty()) ++i;
    if (i >= lines.size()) throw ParseError(lines.size(), 1, "unexpected end of witness");
    return lines[i++];
  };
  auto number = [&](const detail::Token& t) {
    try {
      std::size_t used = 0;
      const long v = std::stol(t.text, &used);
      if (used != t.text.size() || v < 0 || v > 1'000'000'000) throw std::invalid_argument("");
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw ParseError(i, t.column, "expected a non-negative number");
    }
  };
  auto expect = [&](const std::string& word, std::size_t arity) -> std::vector<detail::Token>& {
    auto& l = next();
    if (l[0].text != word || l.size() != arity + 1)
      throw ParseError(i, l[0].column, "expected `" + word + "`");
    return l;
  };

  WitnessFile w;
  auto& header = next();
  if (header.size() != 2 || header[0].text != "paramck-witness" || header[1].text != "1")
    throw ParseError(i, 1, "not a paramck witness (version 1)");
  w.mode = expect("mode", 1)[1].text;
  w.k = number(expect("k", 1)[1]);
  auto* l = &next();
  if ((*l)[0].text == "pivot") {
    if (l->size() != 3) throw ParseError(i, 1, "expected `pivot state symbol`");
    w.pivot = Pivot{number((*l)[1]), number((*l)[2])};
    l = &next();
  }
  if ((*l)[0].text != "stem" || l->size() != 1) throw ParseError(i, 1, "expected `stem`");
  auto* target = &w.stem;
  for (;;) {
    auto& s = next();
    if (s[0].text == "cycle" && s.size() == 1 && target == &w.stem) {
      target = &w.cycle;
      continue;
    }
    if (s[0].text == "end" && s.size() == 1 && target == &w.cycle) break;
    if (s.size() != 2) throw ParseError(i, 1, "expected `actor transition-id`");
    target->emplace_back(number(s[0]), number(s[1]));
  }
  return w;
}

/// Resolves transition ids against `net`; unknown ids throw Error.
inline Witness to_witness(const Network& net, const WitnessFile& f) {
  Witness w;
  w.k = f.k;
  w.pivot = f.pivot;
  for (auto [a, t] : f.stem) w.stem.push_back({a, net.transition(t)});
  for (auto [a, t] : f.cycle) w.cycle.push_back({a, net.transition(t)});
  return w;
}

}  // namespace paramck
