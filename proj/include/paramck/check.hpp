#pragma once

// Mode selection and orchestration for a parsed network.

#include <cstdlib>
#include <optional>
#include <string>

#include "cycle_search.hpp"
#include "explicit_engine.hpp"
#include "machines.hpp"
#include "pushdown.hpp"
#include "reduction.hpp"

namespace paramck {

enum class Mode : std::uint8_t { automatic, fsm_fsm, pdm_fsm, pdm_pdm, explicit_search };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::automatic: return "auto";
    case Mode::fsm_fsm: return "fsm-fsm";
    case Mode::pdm_fsm: return "pdm-fsm";
    case Mode::pdm_pdm: return "pdm-pdm";
    case Mode::explicit_search: return "explicit";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::automatic, Mode::fsm_fsm, Mode::pdm_fsm, Mode::pdm_pdm, Mode::explicit_search})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct CheckOptions {
  Mode mode = Mode::automatic;
  /// Explicit mode tries 1..max_contributors contributors.
  int max_contributors = 4;
  /// Stack bound of explicit mode when a machine is pushdown.
  std::size_t stack_bound = 8;
  SymbolicOptions symbolic;
  std::size_t state_budget = 5'000'000;
};

/// Sets every state and solver cap to `budget`.
inline void apply_budget(CheckOptions& o, std::size_t budget) {
  o.state_budget = budget;
  o.symbolic.abstract_budget = budget;
  o.symbolic.restriction_budget = budget;
  o.symbolic.solver.node_budget = budget;
}

/// Reads PARAMCK_BUDGET; nullopt if unset. Throws Error if malformed.
inline std::optional<std::size_t> budget_from_env() {
  const char* v = std::getenv("PARAMCK_BUDGET");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0 || v[0] == '-') throw Error("PARAMCK_BUDGET must be a positive integer");
  return static_cast<std::size_t>(n);
}

/// Mode implied by the machine kinds.
inline Mode resolve_mode(const Network& net, Mode requested) {
  if (requested != Mode::automatic) return requested;
  if (is_pdm(net.contributor)) return Mode::pdm_pdm;
  return is_pdm(net.leader) ? Mode::pdm_fsm : Mode::fsm_fsm;
}

/// The network a witness of `mode` refers to: leaders and contributors are
/// lifted as the mode needs, and pushdown contributors are restricted.
inline Network network_for(const Network& net, Mode mode, std::size_t restriction_budget = 200'000) {
  switch (mode) {
    case Mode::automatic: return network_for(net, resolve_mode(net, mode), restriction_budget);
    case Mode::explicit_search: return net;
    case Mode::fsm_fsm:
      if (is_pdm(net.leader) || is_pdm(net.contributor))
        throw Error("fsm-fsm mode needs finite-state leader and contributor");
      return net;
    case Mode::pdm_fsm:
      if (is_pdm(net.contributor)) throw Error("pdm-fsm mode needs a finite-state contributor");
      return Network{net.values, as_pdm(net.leader), net.contributor};
    case Mode::pdm_pdm: {
      const Network lifted{net.values, as_pdm(net.leader), as_pdm(net.contributor)};
      return restricted_network(lifted, restriction_budget);
    }
  }
  throw Error("unknown mode");
}

struct Report {
  Mode mode = Mode::automatic;  // resolved
  CheckResult result;
  /// Network the witness refers to.
  Network network;
};

inline Report run_check(const Network& net, const CheckOptions& opts = {}) {
  Report rep;
  rep.mode = resolve_mode(net, opts.mode);
  SymbolicOptions sym = opts.symbolic;
  switch (rep.mode) {
    case Mode::fsm_fsm:
      rep.network = network_for(net, rep.mode);
      rep.result = check_fsm_fsm(rep.network, sym);
      break;
    case Mode::pdm_fsm:
      rep.network = network_for(net, rep.mode);
      rep.result = check_pdm_fsm(rep.network, sym);
      break;
    case Mode::pdm_pdm: {
      const Network lifted{net.values, as_pdm(net.leader), as_pdm(net.contributor)};
      rep.result = check_pdm_pdm(lifted, sym);
      if (rep.result.verdict != Verdict::budget) rep.network = network_for(net, rep.mode, sym.restriction_budget);
      break;
    }
    case Mode::explicit_search: {
      rep.network = net;
      ExplicitOptions eo;
      eo.state_budget = opts.state_budget;
      if (is_pdm(net.leader) || is_pdm(net.contributor)) eo.stack_bound = opts.stack_bound;
      if (opts.max_contributors < 1) throw Error("contributor count must be at least 1");
      bool exhausted = false;
      for (int k = 1; k <= opts.max_contributors; ++k) {
        auto r = check_explicit(net, k, eo);
        if (r.verdict == Verdict::nonempty) {
          rep.result = std::move(r);
          return rep;
        }
        exhausted = exhausted || r.verdict == Verdict::budget;
        rep.result.stats.concrete_configs += r.stats.concrete_configs;
      }
      rep.result.verdict = exhausted ? Verdict::budget : Verdict::empty;
      rep.result.note = std::string(exhausted ? "state budget exceeded" : "no lasso") + " with at most " +
                        std::to_string(opts.max_contributors) + " contributors";
      if (eo.stack_bound) rep.result.note += " and stacks of height at most " + std::to_string(*eo.stack_bound);
      break;
    }
    case Mode::automatic: break;
  }
  return rep;
}

}  // namespace paramck
