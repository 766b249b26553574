#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "paramck/check.hpp"
#include "paramck/io.hpp"

using namespace paramck;
using nlohmann::json;

namespace {

constexpr int kInputError = 2;
constexpr int kBudget = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Inputs {
  std::string leader, contributor, property;
};

Network load(const Inputs& in) {
  std::vector<Diagnostic> warnings;
  auto net = build_network(read_file(in.leader), read_file(in.contributor), read_file(in.property), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w.message << "\n";
  return net;
}

json steps_json(const Network& net, const std::vector<Step>& steps) {
  json a = json::array();
  for (const auto& s : steps) a.push_back({{"actor", s.actor}, {"transition", net.id(s.transition)}});
  return a;
}

json report_json(const Report& rep) {
  const auto& r = rep.result;
  json j;
  j["verdict"] = to_string(r.verdict);
  j["mode"] = to_string(rep.mode);
  j["statistics"] = {{"concrete_configs", r.stats.concrete_configs},
                     {"abstract_configs", r.stats.abstract_configs},
                     {"candidates", r.stats.candidates},
                     {"lp_solves", r.stats.lp_solves},
                     {"splits", r.stats.splits},
                     {"restriction_bound", r.stats.restriction_bound},
                     {"restricted_states", r.stats.restricted_states},
                     {"contributors", r.stats.contributors}};
  if (!r.note.empty()) j["note"] = r.note;
  if (r.witness) {
    const auto& w = *r.witness;
    j["witness"] = {{"k", w.k}, {"stem", steps_json(rep.network, w.stem)}, {"cycle", steps_json(rep.network, w.cycle)}};
    if (w.pivot) j["witness"]["pivot"] = {{"state", w.pivot->state}, {"symbol", w.pivot->symbol}};
  }
  return j;
}

int run_check_command(const Inputs& in, const std::string& mode_name, int contributors, std::size_t stack_bound,
                      const std::string& witness_out, const std::string& smt_out, bool as_json) {
  CheckOptions opts;
  const auto mode = parse_mode(mode_name);
  if (!mode) throw Error("unknown mode `" + mode_name + "`");
  opts.mode = *mode;
  opts.max_contributors = contributors;
  opts.stack_bound = stack_bound;
  if (auto b = budget_from_env()) apply_budget(opts, *b);

  std::ofstream smt;
  if (!smt_out.empty()) {
    smt.open(smt_out);
    if (!smt) throw Error("cannot write " + smt_out);
    opts.symbolic.on_system = [&smt, n = 0](const LinearSystem& sys) mutable {
      if (n++) smt << "(reset)\n";
      smt << "; candidate " << n << "\n" << to_smtlib(sys);
    };
  }

  const Network net = load(in);
  const Report rep = run_check(net, opts);
  const auto& r = rep.result;
  if (r.witness && !witness_out.empty()) {
    std::ofstream out(witness_out);
    if (!out) throw Error("cannot write " + witness_out);
    out << write_witness(rep.network, *r.witness, to_string(rep.mode));
  }
  if (as_json) {
    std::cout << report_json(rep).dump(2) << "\n";
  } else {
    std::cout << to_string(r.verdict) << "\n";
    std::cout << "mode: " << to_string(rep.mode) << "\n";
    if (r.stats.restriction_bound) std::cout << "restriction bound N: " << r.stats.restriction_bound << "\n";
    if (r.witness) std::cout << "contributors in witness: " << r.witness->k << "\n";
    if (!r.note.empty()) std::cout << "note: " << r.note << "\n";
  }
  return r.verdict == Verdict::budget ? kBudget : 0;
}

int run_replay_command(const Inputs& in, const std::string& witness_path) {
  WitnessFile wf;
  Network net;
  Mode mode{};
  try {
    wf = parse_witness(read_file(witness_path));
    const auto m = parse_mode(wf.mode);
    if (!m || *m == Mode::automatic) throw Error("witness names unknown mode `" + wf.mode + "`");
    mode = *m;
    net = load(in);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  try {
    const Network target = network_for(net, mode);
    const auto result = replay(target, to_witness(target, wf));
    if (result) {
      std::cout << "VALID\n";
      return 0;
    }
    std::cout << "INVALID at step " << result.step << ": " << result.reason << "\n";
  } catch (const Error& e) {
    std::cout << "INVALID: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameterized verification of leader/contributor networks"};
  app.require_subcommand(1);

  Inputs in;
  auto add_inputs = [&in](CLI::App* cmd) {
    cmd->add_option("--leader", in.leader, "Leader machine file")->required();
    cmd->add_option("--contributor", in.contributor, "Contributor machine file")->required();
    cmd->add_option("--property", in.property, "Property automaton file")->required();
  };

  auto* check = app.add_subcommand("check", "Decide whether some run satisfies the property");
  add_inputs(check);
  std::string mode = "auto", witness_out, smt_out;
  int contributors = 4;
  std::size_t stack_bound = 8;
  bool as_json = false;
  check->add_option("--mode", mode, "auto, fsm-fsm, pdm-fsm, pdm-pdm or explicit")->capture_default_str();
  check->add_option("--contributors", contributors, "Largest contributor count tried by explicit mode")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  check->add_option("--stack-bound", stack_bound, "Stack bound of explicit mode")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  check->add_option("--witness", witness_out, "Write the witness here on NONEMPTY");
  check->add_option("--dump-smt", smt_out, "Write every candidate system as SMT-LIB");
  check->add_flag("--json", as_json, "Print a JSON report");

  auto* replay_cmd = app.add_subcommand("replay", "Check a witness against the concrete semantics");
  add_inputs(replay_cmd);
  std::string witness_in;
  replay_cmd->add_option("--witness", witness_in, "Witness file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (*check) return run_check_command(in, mode, contributors, stack_bound, witness_out, smt_out, as_json);
    return run_replay_command(in, witness_in);
  } catch (const BudgetExceeded& e) {
    std::cout << "BUDGET\nnote: " << e.what() << "\n";
    return kBudget;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
