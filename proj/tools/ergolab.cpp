// ergolab command-line front end: check, slln, hilbert, random, list-examples.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ergolab/commands.hpp"

namespace {

using nlohmann::json;

enum class Kind { text, number, count, numbers, texts, flag, object };

struct Key {
  const char* name;
  Kind kind;
  const char* help;
};

// Every flag is also a config key of the same name.
const std::vector<Key>& keys() {
  static const std::vector<Key> k{
      {"example", Kind::text, "registered example id (E0..E7, EwA)"},
      {"G", Kind::text, "reference weight G_n (weight grammar)"},
      {"W", Kind::text, "weight W_n; <G> stands for the G weight"},
      {"schedule", Kind::text, "identity | power:R | power-floor:R | superexp | geometric:Q | explicit:... | weight-driven"},
      {"xi", Kind::text, "gap sequence for (W2): derived | increments | expr:E | explicit:..."},
      {"modulation", Kind::text, "one | zero | alternating | const:C | rotation:T | twist:R | chirp:PHI | power:C:E | explicit:... | random:LAW"},
      {"field", Kind::text, "characters | ewa-characters | orbit | iid:LAW | zero"},
      {"law", Kind::text, "rademacher | gaussian | complex-gaussian | zero | deterministic:..."},
      {"check", Kind::text, "t41 | t44"},
      {"stat", Kind::text, "sup | hilbert"},
      {"h", Kind::text, "one | z"},
      {"operator", Kind::object, "operator / cocycle as JSON"},
      {"conditions", Kind::texts, "comma-separated condition kinds"},
      {"p", Kind::number, "exponent p"},
      {"beta", Kind::number, "example parameter beta"},
      {"eps", Kind::number, "example parameter eps"},
      {"alpha", Kind::number, "example parameter alpha"},
      {"delta", Kind::number, "example parameter delta"},
      {"gamma", Kind::number, "example parameter gamma"},
      {"r", Kind::numbers, "comma-separated twist exponents"},
      {"ladder", Kind::text, "standard | dyadic:A:B | decade:A:B | n1,n2,..."},
      {"n-max", Kind::count, "largest index"},
      {"grid", Kind::count, "circle grid size (0 = automatic)"},
      {"samples", Kind::count, "Monte Carlo samples"},
      {"points", Kind::count, "sample points of the a.e. diagnostic"},
      {"lambdas", Kind::count, "lambda grid points for t41"},
      {"fields", Kind::count, "random fields for t44"},
      {"seed", Kind::count, "random seed"},
      {"threads", Kind::count, "worker threads"},
      {"out", Kind::text, "output root directory"},
      {"expect", Kind::texts, "assertion token; mismatch exits 1"},
      {"full-sequence", Kind::flag, "also check the full-sequence sum"},
      {"no-regime-check", Kind::flag, "run Monte Carlo estimates outside the theorem regime"},
      {"allow-coarse", Kind::flag, "allow circle grids coarser than 4 n_n"},
      {"opnorm", Kind::flag, "operator-norm Cauchy table"},
      {"ladder-1e7", Kind::flag, "extend the standard ladder to 10^7"},
  };
  return k;
}

const std::vector<std::string> kGlobal{"seed", "out", "threads", "ladder", "expect", "no-regime-check", "allow-coarse"};

const std::map<std::string, std::vector<std::string>>& command_keys() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"check", {"example", "G", "W", "schedule", "xi", "modulation", "conditions", "p", "beta", "eps", "alpha", "delta",
                 "gamma", "full-sequence", "ladder-1e7"}},
      {"slln", {"example", "G", "W", "schedule", "field", "operator", "p", "beta", "eps", "alpha", "delta", "gamma", "n-max",
                "grid", "points"}},
      {"hilbert", {"example", "G", "W", "schedule", "modulation", "operator", "check", "opnorm", "p", "beta", "eps", "alpha",
                   "delta", "gamma", "r", "n-max", "grid", "lambdas", "fields"}},
      {"random", {"example", "G", "W", "schedule", "law", "stat", "operator", "h", "p", "beta", "eps", "alpha", "delta",
                  "gamma", "n-max", "samples", "grid", "ladder-1e7"}},
      {"list-examples", {}},
  };
  return m;
}

const Key& key(const std::string& name) {
  for (const auto& k : keys()) {
    if (name == k.name) return k;
  }
  throw std::logic_error("no key " + name);
}

struct Slot {
  std::vector<std::string> values;
  bool flag = false;
  CLI::Option* opt = nullptr;
};

void add_key(CLI::App& app, const Key& k, Slot& slot) {
  const std::string flag = std::string("--") + k.name;
  if (k.kind == Kind::flag) {
    slot.opt = app.add_flag(flag, slot.flag, k.help);
  } else if (k.kind == Kind::texts && std::string(k.name) == "expect") {
    slot.opt = app.add_option(flag, slot.values, k.help)->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  } else {
    slot.opt = app.add_option(flag, slot.values, k.help)->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

json value_of(const Key& k, const Slot& s) {
  using ergolab::detail::parse_number;
  if (k.kind == Kind::flag) return s.flag;
  if (k.kind == Kind::texts) {
    std::vector<std::string> out;
    for (const auto& v : s.values) {
      if (std::string(k.name) == "expect") {
        out.push_back(v);
      } else {
        for (const auto& [item, at] : ergolab::detail::split_list(v, 0)) out.emplace_back(item);
      }
    }
    return out;
  }
  const std::string& v = s.values.back();
  switch (k.kind) {
    case Kind::text:
      return v;
    case Kind::object:
      try {
        return json::parse(v);
      } catch (const json::parse_error& e) {
        throw ergolab::ParseError(std::string("--operator is not valid JSON: ") + e.what(), e.byte);
      }
    case Kind::number:
      return parse_number(v, 0);
    case Kind::count:
      return ergolab::detail::parse_count(v, 0);
    case Kind::numbers: {
      std::vector<double> out;
      for (const auto& [item, at] : ergolab::detail::split_list(v, 0)) out.push_back(parse_number(item, at));
      return out;
    }
    default:
      return nullptr;
  }
}

json read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ergolab::Error("cannot read config file " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ergolab::ParseError("config file " + path + " is not valid JSON", e.byte);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolab: weighted ergodic averages, Hilbert transforms and admissibility checks"};
  app.set_version_flag("--version", std::string(ergolab::kToolName) + " " + ergolab::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  std::map<std::string, Slot> global_slots;
  for (const auto& name : kGlobal) add_key(app, key(name), global_slots[name]);

  std::map<std::string, std::map<std::string, Slot>> slots;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [cmd, names] : command_keys()) {
    CLI::App* sub = app.add_subcommand(cmd, cmd == "list-examples" ? "list the registered examples" : "run " + cmd);
    sub->fallthrough();
    sub->set_help_flag("--help", "print this help and exit");  // keeps -h free: --h is a config key
    for (const auto& name : names) add_key(*sub, key(name), slots[cmd][name]);
    subs[cmd] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    std::string command;
    for (const auto& [cmd, sub] : subs) {
      if (sub->parsed()) command = cmd;
    }
    json patch = json::object();
    if (!config_path.empty()) patch = read_config(config_path);
    if (!patch.is_object()) throw ergolab::ParseError("config must be a JSON object", 0);
    const auto apply = [&](const std::map<std::string, Slot>& ss) {
      for (const auto& [name, s] : ss) {
        if (s.opt && s.opt->count() > 0) patch[name] = value_of(key(name), s);
      }
    };
    apply(global_slots);
    apply(slots[command]);
    patch["command"] = command;
    const ergolab::RunConfig cfg = ergolab::RunConfig::from_json(patch);
    return ergolab::run_command(cfg, std::cout).exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
