// Copyright 2026 The optverify Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// optverify: verify, attack, oracle, train, gen, export-mps.
// Exit codes: 0 success, 2 time limit reached, 1 error. Errors are printed as
// one JSON line on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "optverify/attack/pga.hpp"
#include "optverify/dcopf/case.hpp"
#include "optverify/dcopf/formulations.hpp"
#include "optverify/knapsack/formulation.hpp"
#include "optverify/lp/io.hpp"
#include "optverify/verify/oracle.hpp"
#include "optverify/verify/verify.hpp"

namespace {

using namespace optverify;

struct RunConfig {
  std::string case_path;
  std::string weights_path;
  std::string family = "dcopf";
  double u = 0.1;
  bool freeze_beta = false;
  std::string formulation = "compact";
  std::string obbt = "lp";
  std::string warm = "reference";
  double time_limit = 3600.0;
  double gap = 1e-9;
  long node_cap = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  int starts = 8;
  int partitions = 1;
  int vfa_cuts = 200;
  int resolution = 20;
  int n = 500;
  std::vector<int> hidden{16};
  int epochs = 500;
  double lr = 1e-3;
  double penalty = -1.0;
  int samples = 200;
  int restarts = 4;
  std::string out;
  std::string csv;
  std::string config;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) throw ModelError("cannot write " + path);
  os << text;
  if (!os) throw ModelError("write failed for " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

bool is_knapsack(const RunConfig& c) {
  if (c.family == "knapsack") return true;
  if (c.family == "dcopf") return false;
  throw ModelError("unknown family '" + c.family + "'");
}

void require(const std::string& v, const char* flag) {
  if (v.empty()) throw ModelError(std::string("missing required flag ") + flag);
}

void check_common(const RunConfig& c) {
  if (c.u < 0.0) throw ModelError("--u must be nonnegative");
  if (!(c.time_limit > 0.0)) throw ModelError("--time-limit must be positive");
}

MilpLimits limits_of(const RunConfig& c) {
  MilpLimits l;
  l.time_s = c.time_limit;
  l.gap_rel = c.gap;
  if (c.node_cap > 0) l.node_cap = c.node_cap;
  return l;
}

AttackConfig attack_of(const RunConfig& c) {
  AttackConfig a;
  a.workers = c.workers;
  a.starts = c.starts;
  a.partitions = c.partitions;
  return a;
}

int cmd_verify(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.weights_path, "--weights");
  check_common(c);
  VerifyOptions o;
  o.formulation = parse_formulation(c.formulation);
  o.obbt = parse_bound_mode(c.obbt);
  o.warm = parse_warm_start(c.warm);
  o.limits = limits_of(c);
  o.attack = attack_of(c);
  o.vfa_cuts = c.vfa_cuts;
  o.seed = c.seed;
  const MlpNetwork net = load_weights(c.weights_path);
  VerificationReport rep;
  std::string system = c.case_path;
  if (is_knapsack(c)) {
    if (o.formulation == Formulation::kBilevel) throw ModelError("bilevel unavailable for non-convex family");
    const auto k = load_knapsack_case(c.case_path);
    rep = verify(k, net, make_knapsack_domain(k, c.u), o);
  } else {
    const auto k = load_dcopf_case(c.case_path);
    rep = verify(k, net, make_load_domain(k, c.u, c.freeze_beta), o);
  }
  write_json(c.out, to_json(rep));
  if (!c.csv.empty()) {
    std::ifstream probe(c.csv);
    const bool fresh = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
    std::ofstream os(c.csv, std::ios::app);
    if (!os) throw ModelError("cannot write " + c.csv);
    if (fresh) os << csv_header() << "\n";
    os << csv_row(system, rep) << "\n";
  }
  return rep.status == MilpStatus::kTimeLimit ? 2 : 0;
}

int cmd_attack(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.weights_path, "--weights");
  check_common(c);
  if (is_knapsack(c)) throw ModelError("attack unavailable for non-convex family");
  const auto k = load_dcopf_case(c.case_path);
  const MlpNetwork net = load_weights(c.weights_path);
  const LoadDomain dom = make_load_domain(k, c.u, c.freeze_beta);
  const auto vfa = build_dcopf_vfa(k, dom, c.vfa_cuts, c.seed);
  write_json(c.out, to_json(pga_vfa(k, net, dom, vfa, attack_of(c), c.seed)));
  return 0;
}

int cmd_oracle(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.weights_path, "--weights");
  check_common(c);
  const MlpNetwork net = load_weights(c.weights_path);
  OracleResult r;
  if (is_knapsack(c)) {
    const auto k = load_knapsack_case(c.case_path);
    r = oracle_grid(make_knapsack_domain(k, c.u), net, c.resolution, c.workers);
  } else {
    const auto k = load_dcopf_case(c.case_path);
    r = oracle_grid(k, net, make_load_domain(k, c.u, c.freeze_beta), c.resolution, c.workers);
  }
  write_json(c.out, to_json(r));
  return 0;
}

// Trains from `restarts` initializations (seeds seed, seed+1, ...) and keeps
// the one with the lowest final loss.
int cmd_train(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.out, "--out");
  if (c.restarts < 1 || c.epochs < 1 || c.samples < 1) throw ModelError("--restarts, --epochs and --samples must be positive");
  std::vector<Eigen::VectorXd> inputs;
  std::vector<int> widths;
  std::function<TrainResult(MlpNetwork)> train;
  DcopfCase dk;
  KnapsackCase kk;
  if (is_knapsack(c)) {
    kk = load_knapsack_case(c.case_path);
    const auto dom = make_knapsack_domain(kk, c.u);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < c.samples; ++s) {
      Eigen::VectorXd z(dom.dim());
      for (int i = 0; i < z.size(); ++i) z(i) = dom.lo()(i) + unit(rng) * (dom.hi()(i) - dom.lo()(i));
      inputs.push_back(dom.net_input(z));
    }
    widths.push_back(dom.dim());
    train = [&](MlpNetwork init) { return train_knapsack_proxy(kk, std::move(init), inputs, c.epochs, c.lr); };
  } else {
    dk = load_dcopf_case(c.case_path);
    for (const auto& inst : generate_instances(dk, c.samples, c.seed).instances) inputs.push_back(inst.d);
    widths.push_back(dk.buses);
    const double penalty = c.penalty > 0.0 ? c.penalty : dk.m_th;
    train = [&, penalty](MlpNetwork init) {
      return train_dcopf_proxy(dk, std::move(init), inputs, c.epochs, c.lr, penalty);
    };
  }
  for (int h : c.hidden) {
    if (h < 1) throw ModelError("--hidden widths must be positive");
    widths.push_back(h);
  }
  widths.push_back(is_knapsack(c) ? kk.items() : dk.buses);
  std::optional<TrainResult> best;
  for (int r = 0; r < c.restarts; ++r) {
    TrainResult t = train(MlpNetwork::random(widths, c.seed + static_cast<std::uint64_t>(r)));
    if (!best || t.loss.back() < best->loss.back()) best = std::move(t);
  }
  save_weights(c.out, best->net);
  std::cerr << nlohmann::json{{"initial_loss", best->loss.front()}, {"final_loss", best->loss.back()}}.dump() << "\n";
  return 0;
}

int cmd_gen(const RunConfig& c) {
  require(c.case_path, "--case");
  if (is_knapsack(c)) throw ModelError("gen produces DC-OPF instances only");
  write_json(c.out, to_json(generate_instances(load_dcopf_case(c.case_path), c.n, c.seed)));
  return 0;
}

int cmd_export_mps(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.weights_path, "--weights");
  check_common(c);
  const MlpNetwork net = load_weights(c.weights_path);
  const BoundMode bm = parse_bound_mode(c.obbt);
  std::ostringstream os;
  if (is_knapsack(c)) {
    if (parse_formulation(c.formulation) == Formulation::kBilevel)
      throw ModelError("bilevel unavailable for non-convex family");
    const auto k = load_knapsack_case(c.case_path);
    const auto dom = make_knapsack_domain(k, c.u);
    const auto b = detail::network_bounds(net, dom.input_map(), dom.lo(), dom.hi(), bm, limits_of(c));
    const auto m = build_knapsack_compact_milp(dom, net, b);
    write_mps(os, m.problem().lp, m.problem().binaries);
  } else {
    const auto k = load_dcopf_case(c.case_path);
    const auto dom = make_load_domain(k, c.u, c.freeze_beta);
    const auto b = detail::network_bounds(net, dom.input_map(), dom.lo(), dom.hi(), bm, limits_of(c));
    const auto m = build_dcopf_model(k, net, dom, b, parse_formulation(c.formulation), {});
    write_mps(os, m.problem().lp, m.problem().binaries);
  }
  write_text(c.out, os.str());
  return 0;
}

// Fills options of `sub` that were not given on the command line from
// `key = value` lines of a TOML-style file.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  for (const auto& item : CLI::ConfigTOML().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config")
      throw CLI::ConfigError::Extras(item.fullname());
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

void print_error(const std::string& kind, const std::string& msg) {
  std::cerr << nlohmann::json{{"error", msg}, {"kind", kind}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Worst-case optimality gap certificates for optimization proxies"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("--config", cfg.config, "TOML-style file of flag values; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    s->add_option("--case", cfg.case_path, "Case JSON");
    s->add_option("--family", cfg.family, "dcopf or knapsack")->check(CLI::IsMember({"dcopf", "knapsack"}));
    s->add_option("--u", cfg.u, "Domain half-width");
    s->add_option("--seed", cfg.seed, "Random seed");
    s->add_option("--out", cfg.out, "Output path (stdout when omitted)");
  };
  auto solver = [&](CLI::App* s) {
    s->add_option("--weights", cfg.weights_path, "Network weights JSON");
    s->add_flag("--freeze-beta", cfg.freeze_beta, "Fix every beta to 0");
    s->add_option("--workers", cfg.workers, "Worker threads");
  };

  auto* verify_cmd = app.add_subcommand("verify", "Solve the worst-case gap MILP");
  common(verify_cmd);
  solver(verify_cmd);
  verify_cmd->add_option("--formulation", cfg.formulation, "compact or bilevel")->check(CLI::IsMember({"compact", "bilevel"}));
  verify_cmd->add_option("--obbt", cfg.obbt, "lp, milp or off")->check(CLI::IsMember({"lp", "milp", "off"}));
  verify_cmd->add_option("--warm", cfg.warm, "none, reference or pga")->check(CLI::IsMember({"none", "reference", "pga"}));
  verify_cmd->add_option("--time-limit", cfg.time_limit, "MILP time limit in seconds");
  verify_cmd->add_option("--gap", cfg.gap, "Relative optimality gap");
  verify_cmd->add_option("--node-cap", cfg.node_cap, "Branch-and-bound node limit (0: none)");
  verify_cmd->add_option("--starts", cfg.starts, "Attack starts per partition for --warm pga");
  verify_cmd->add_option("--partitions", cfg.partitions, "Attack partitions for --warm pga");
  verify_cmd->add_option("--vfa-cuts", cfg.vfa_cuts, "Value-function cuts for --warm pga");
  verify_cmd->add_option("--csv", cfg.csv, "Append a summary row to this CSV file");

  auto* attack_cmd = app.add_subcommand("attack", "Projected gradient attack with value-function cuts");
  common(attack_cmd);
  solver(attack_cmd);
  attack_cmd->add_option("--starts", cfg.starts, "Starts per partition");
  attack_cmd->add_option("--partitions", cfg.partitions, "Slabs along alpha");
  attack_cmd->add_option("--vfa-cuts", cfg.vfa_cuts, "Value-function cuts");

  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive latent grid search");
  common(oracle_cmd);
  solver(oracle_cmd);
  oracle_cmd->add_option("--resolution", cfg.resolution, "Grid points per coordinate");

  auto* train_cmd = app.add_subcommand("train", "Train a toy proxy network");
  common(train_cmd);
  train_cmd->add_option("--hidden", cfg.hidden, "Hidden widths, comma separated")->delimiter(',');
  train_cmd->add_option("--epochs", cfg.epochs, "Full-batch epochs");
  train_cmd->add_option("--lr", cfg.lr, "Learning rate");
  train_cmd->add_option("--samples", cfg.samples, "Training inputs");
  train_cmd->add_option("--penalty", cfg.penalty, "Thermal penalty during training (default: case value)");
  train_cmd->add_option("--restarts", cfg.restarts, "Initializations tried");

  auto* gen_cmd = app.add_subcommand("gen", "Generate DC-OPF instances with duals");
  common(gen_cmd);
  gen_cmd->add_option("--n", cfg.n, "Instance count");

  auto* mps_cmd = app.add_subcommand("export-mps", "Write the gap MILP in MPS format");
  common(mps_cmd);
  solver(mps_cmd);
  mps_cmd->add_option("--formulation", cfg.formulation, "compact or bilevel")->check(CLI::IsMember({"compact", "bilevel"}));
  mps_cmd->add_option("--obbt", cfg.obbt, "lp, milp or off")->check(CLI::IsMember({"lp", "milp", "off"}));

  try {
    app.parse(argc, argv);
    if (!cfg.config.empty()) apply_config(app.get_subcommands().front(), cfg.config);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 1;
  }

  try {
    if (*verify_cmd) return cmd_verify(cfg);
    if (*attack_cmd) return cmd_attack(cfg);
    if (*oracle_cmd) return cmd_oracle(cfg);
    if (*train_cmd) return cmd_train(cfg);
    if (*gen_cmd) return cmd_gen(cfg);
    if (*mps_cmd) return cmd_export_mps(cfg);
  } catch (const ModelError& e) {
    print_error("model", e.what());
    return 1;
  } catch (const NumericalFailure& e) {
    print_error("numerical", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 1;
}
