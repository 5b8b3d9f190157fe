// Copyright 2026 The tunelab Authors
//
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

#include "tunelab/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tunelab/csv.hpp"
#include "tunelab/gadgets.hpp"
#include "tunelab/gnn/bounds.hpp"
#include "tunelab/instances.hpp"
#include "tunelab/profiler.hpp"
#include "tunelab/rng.hpp"
#include "tunelab/solvers.hpp"
#include "tunelab/tuner.hpp"

namespace tunelab::cli {

namespace fs = std::filesystem;

namespace {

// Raised when a command ran but its verification did not pass.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string in;
  std::string out;
  std::string family = "alpha";
  std::uint64_t seed = 1;
  double tol = 1e-9;
  std::string config;

  double param = 0.0;
  double c_const = 0.99;
  std::string eval = "transductive";
  int grid = 256;
  std::string mode = "exact";
  int grid_points = 100;
  double threshold = 0.0;
  int truth = -1;
  int m = 3;

  int n = 30;
  double eps = 0.1;
  double fp = 0.05;
  int seeds = 20;
  int m_train = 0;
  int m_test = 0;
  std::optional<std::uint64_t> test_seed;

  std::string model = "sgc";
  gnn::BoundInputs bound;
};

EvalSet parse_eval(const std::string& s) {
  if (s == "transductive") return EvalSet::Transductive;
  if (s == "unlabeled") return EvalSet::Unlabeled;
  if (s == "all") return EvalSet::All;
  throw InputError("unknown eval set \"" + s + "\"");
}

FamilySpec family_spec(const Options& o) { return {parse_family(o.family), o.c_const}; }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

std::optional<fs::path> out_dir(const Options& o) {
  if (o.out.empty()) return std::nullopt;
  fs::create_directories(o.out);
  return fs::path(o.out);
}

bool is_sidecar(const fs::path& p) {
  const std::string name = p.filename().string();
  const std::string suffix = ".sidecar.json";
  return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<ProblemInstance> load_instances(const std::string& in) {
  if (in.empty()) throw InputError("--in is required");
  const fs::path p(in);
  if (!fs::exists(p)) throw InputError("input path does not exist: " + in);
  if (!fs::is_directory(p)) return {load(p)};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(p)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" && !is_sidecar(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no instance files in " + in);
  std::vector<ProblemInstance> out;
  for (const auto& f : files) out.push_back(load(f));
  return out;
}

// --- subcommands -----------------------------------------------------------

int cmd_solve(const Options& o, std::ostream& out) {
  const auto instances = load_instances(o.in);
  if (instances.size() != 1) throw InputError("solve expects a single instance file");
  const ProblemInstance& inst = instances.front();
  const ScoreMatrix f = solve(inst, family_spec(o).at(o.param));
  const auto pred = predict(f);

  if (auto dir = out_dir(o)) {
    std::vector<std::string> header{"node"};
    for (int k = 0; k < f.scores.cols(); ++k) header.push_back("class_" + std::to_string(k));
    CsvTable scores(header);
    CsvTable predictions({"node", "prediction"});
    for (int i = 0; i < inst.n(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (int k = 0; k < f.scores.cols(); ++k) row.push_back(format_number(f.scores(i, k)));
      scores.add_row(std::move(row));
      predictions.add_row({std::to_string(i), std::to_string(pred[i])});
    }
    write_file(*dir / "scores.csv", scores.str());
    write_file(*dir / "predictions.csv", predictions.str());
  }
  nlohmann::json summary = {{"command", "solve"},
                            {"family", o.family},
                            {"param", o.param},
                            {"residual", f.residual},
                            {"predictions", pred}};
  if (inst.truth()) summary["loss"] = zero_one_loss(inst, pred, parse_eval(o.eval));
  out << summary.dump(2) << "\n";
  return kExitOk;
}

ProfilerConfig profiler_config(const Options& o) {
  ProfilerConfig pc;
  pc.tolerance = o.tol;
  pc.initial_grid = o.grid;
  pc.eval = parse_eval(o.eval);
  return pc;
}

int cmd_profile(const Options& o, std::ostream& out) {
  const auto instances = load_instances(o.in);
  const LossProfile prof = profile(instances, family_spec(o), profiler_config(o));
  if (auto dir = out_dir(o)) {
    CsvTable pieces({"piece_lo", "piece_hi", "loss"});
    for (std::size_t k = 0; k < prof.piece_losses.size(); ++k) {
      pieces.add_row({format_number(prof.piece_lo(k)), format_number(prof.piece_hi(k)),
                      format_number(prof.piece_losses[k])});
    }
    CsvTable breaks({"location", "multiplicity"});
    for (std::size_t k = 0; k < prof.breakpoints.size(); ++k) {
      breaks.add_row({format_number(prof.breakpoints[k]), std::to_string(prof.multiplicity[k])});
    }
    CsvTable flips({"breakpoint", "node", "class_j", "class_k", "instance"});
    for (const auto& f : prof.flips) {
      flips.add_row({format_number(f.location), std::to_string(f.node), std::to_string(f.class_from),
                     std::to_string(f.class_to), std::to_string(f.instance)});
    }
    write_file(*dir / "profile.csv", pieces.str());
    write_file(*dir / "breakpoints.csv", breaks.str());
    write_file(*dir / "flips.csv", flips.str());
  }
  nlohmann::json unresolved = nlohmann::json::array();
  for (const auto& u : prof.unresolved) {
    unresolved.push_back({{"instance", u.instance}, {"lo", u.lo}, {"hi", u.hi}});
  }
  out << nlohmann::json{{"command", "profile"},
                        {"family", o.family},
                        {"instances", prof.num_instances},
                        {"breakpoints", prof.breakpoints},
                        {"multiplicity", prof.multiplicity},
                        {"piece_losses", prof.piece_losses},
                        {"unresolved", unresolved}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int cmd_tune(const Options& o, std::ostream& out) {
  const auto instances = load_instances(o.in);
  TuneOptions opts;
  if (o.mode == "exact") {
    opts.mode = TuneMode::Exact;
  } else if (o.mode == "grid") {
    opts.mode = TuneMode::Grid;
  } else {
    throw InputError("unknown tuning mode \"" + o.mode + "\"");
  }
  opts.grid_points = o.grid_points;
  opts.profiler = profiler_config(o);
  const TuneResult r = erm_tune(instances, family_spec(o), opts);
  nlohmann::json j = to_json(r);
  if (auto dir = out_dir(o)) {
    CsvTable table({"param", "loss"});
    for (std::size_t k = 0; k < r.candidates.size(); ++k) {
      table.add_row({format_number(r.candidates[k]), format_number(r.candidate_losses[k])});
    }
    write_file(*dir / "candidates.csv", table.str());
    write_file(*dir / "tune.json", j.dump(2) + "\n");
  }
  j["command"] = "tune";
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_gadget(const Options& o, std::ostream& out) {
  const GadgetSpec spec = make_gadget_spec(family_spec(o), o.threshold);
  const ProblemInstance g = o.truth < 0 ? build_gadget(spec) : build_gadget(spec, o.truth);
  const FlipMeasurement fm = verify_flip(g, spec, o.tol);
  if (auto dir = out_dir(o)) {
    save(*dir / "gadget.json", g);
    write_file(*dir / "gadget.sidecar.json", gadget_sidecar(spec, g).dump(2) + "\n");
  }
  out << nlohmann::json{{"command", "gadget"},
                        {"family", o.family},
                        {"designed", fm.designed},
                        {"measured", fm.measured},
                        {"x", spec.x},
                        {"sweep_flips", fm.sweep_flips},
                        {"class_below", fm.class_below},
                        {"class_above", fm.class_above},
                        {"ok", fm.ok},
                        {"message", fm.message}}
             .dump(2)
      << "\n";
  if (!fm.ok) throw VerificationFailure("gadget verification failed: " + fm.message);
  return kExitOk;
}

std::string bits_string(std::uint32_t b, int m) {
  std::string s;
  for (int i = 0; i < m; ++i) s += ((b >> i) & 1u) ? '1' : '0';
  return s;
}

int cmd_shatter(const Options& o, std::ostream& out) {
  const ShatterFamily fam = build_shatter_family(family_spec(o), o.m);
  const ShatterReport rep = verify_shattering(fam);
  if (auto dir = out_dir(o)) {
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
      save(*dir / ("instance_" + std::to_string(i) + ".json"), fam.members[i].instance);
    }
    write_file(*dir / "shatter.sidecar.json", shatter_sidecar(fam).dump(2) + "\n");
  }
  const std::size_t total = std::size_t{1} << o.m;
  out << "patterns: " << rep.patterns_achieved.size() << "/" << total << "\n";
  nlohmann::json missing = nlohmann::json::array();
  for (auto b : rep.missing) missing.push_back(bits_string(b, o.m));
  out << nlohmann::json{{"command", "shatter"},
                        {"family", o.family},
                        {"m", o.m},
                        {"thresholds", fam.thresholds},
                        {"witnesses", fam.witnesses},
                        {"patterns_achieved", rep.patterns_achieved.size()},
                        {"missing", missing},
                        {"pass", rep.pass}}
             .dump(2)
      << "\n";
  if (!rep.pass) throw VerificationFailure("shattering incomplete");
  return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  if (o.seeds < 1) throw InputError("--seeds must be positive");
  const SampleSizePlan plan = sample_size(o.n, o.eps, o.fp);
  ExperimentConfig cfg = default_experiment_config();
  cfg.generator.n = o.n;
  cfg.family = family_spec(o);
  cfg.m_train = o.m_train > 0 ? o.m_train : static_cast<int>(plan.m);
  cfg.m_test = o.m_test > 0 ? o.m_test : cfg.m_train;
  cfg.tune.profiler = profiler_config(o);

  std::vector<ExperimentReport> reports;
  for (int s = 0; s < o.seeds; ++s) {
    cfg.seed = derive_seed(o.seed, static_cast<std::uint64_t>(s));
    if (o.test_seed) cfg.test_seed = derive_seed(*o.test_seed, static_cast<std::uint64_t>(s));
    reports.push_back(generalization_experiment(cfg));
  }
  double mean_gap = 0.0;
  double max_gap = 0.0;
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& r : reports) {
    mean_gap += r.gap;
    max_gap = std::max(max_gap, r.gap);
    per_seed.push_back(to_json(r));
  }
  mean_gap /= static_cast<double>(reports.size());
  nlohmann::json j = {{"command", "experiment"},
                      {"family", o.family},
                      {"n", o.n},
                      {"m_train", cfg.m_train},
                      {"m_test", cfg.m_test},
                      {"sample_size", to_json(plan)},
                      {"mean_gap", mean_gap},
                      {"max_gap", max_gap},
                      {"runs", per_seed}};
  if (auto dir = out_dir(o)) {
    write_file(*dir / "gaps.csv", gaps_csv(reports));
    write_file(*dir / "experiment.json", j.dump(2) + "\n");
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_bound(const Options& o, std::ostream& out) {
  nlohmann::json j = {{"command", "bound"}, {"model", o.model}, {"log_base", "e"},
                      {"inputs", gnn::to_json(o.bound)}};
  if (o.model == "sgc") {
    const auto k = gnn::sgc_bound_constants(o.bound);
    j["constants"] = {{"k1", k.k1}, {"k2", k.k2}, {"k3", k.k3}};
    j["value"] = gnn::rademacher_bound_sgc(o.bound);
  } else if (o.model == "gcan") {
    const auto k = gnn::gcan_bound_constants(o.bound);
    j["constants"] = {{"k1", k.k1}, {"k2", k.k2}, {"k3", k.k3},
                      {"k4", k.k4}, {"A", k.A},   {"B", k.B}};
    j["value"] = gnn::rademacher_bound_gcan(o.bound);
  } else {
    throw InputError("unknown bound model \"" + o.model + "\"");
  }
  out << "value: " << format_number(j["value"].get<double>()) << "\n";
  out << j.dump(2) << "\n";
  return kExitOk;
}

// --- config file -----------------------------------------------------------

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) return args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) return args[k].substr(9);
  }
  return {};
}

std::string json_scalar(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_number(v.get<double>());
  throw InputError("config key \"" + key + "\" must be a scalar");
}

// Appends "--key value" for config keys the command line does not set.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  const std::string path = config_path(args);
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw InputError("cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InputError("config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string flag = "--" + it.key();
    if (flag == "--config" || flag_given(args, flag)) continue;
    args.push_back(flag);
    args.push_back(json_scalar(it.value(), it.key()));
  }
  return args;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--in", o.in, "instance file or directory");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--family", o.family, "alpha | lambda | delta");
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--tol", o.tol, "profiler / bisection tolerance");
  sub->add_option("--config", o.config, "JSON file of flag values; flags win");
  sub->add_option("--c", o.c_const, "delta family constant c");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);

  Options o;
  CLI::App app{"Hyperparameter tuning for graph-based semi-supervised learning", "tunelab"};
  app.require_subcommand(1);

  auto* solve_cmd = app.add_subcommand("solve", "solve one instance at one parameter");
  add_common(solve_cmd, o);
  solve_cmd->add_option("--param", o.param, "hyperparameter value")->required();
  solve_cmd->add_option("--eval", o.eval, "transductive | unlabeled | all");

  auto* profile_cmd = app.add_subcommand("profile", "piecewise-constant loss profile");
  add_common(profile_cmd, o);
  profile_cmd->add_option("--grid", o.grid, "initial grid size");
  profile_cmd->add_option("--eval", o.eval, "transductive | unlabeled | all");

  auto* tune_cmd = app.add_subcommand("tune", "ERM over an instance set");
  add_common(tune_cmd, o);
  tune_cmd->add_option("--mode", o.mode, "exact | grid");
  tune_cmd->add_option("--grid-points", o.grid_points, "grid mode point count");
  tune_cmd->add_option("--grid", o.grid, "profiler initial grid size");
  tune_cmd->add_option("--eval", o.eval, "transductive | unlabeled | all");

  auto* gadget_cmd = app.add_subcommand("gadget", "build and verify a threshold gadget");
  add_common(gadget_cmd, o);
  gadget_cmd->add_option("--threshold", o.threshold, "designed flip threshold")->required();
  gadget_cmd->add_option("--truth", o.truth, "ground truth class of node u");

  auto* shatter_cmd = app.add_subcommand("shatter", "build and certify a shattering family");
  add_common(shatter_cmd, o);
  shatter_cmd->add_option("--m", o.m, "number of instances");

  auto* exp_cmd = app.add_subcommand("experiment", "synthetic generalization-gap experiment");
  add_common(exp_cmd, o);
  exp_cmd->add_option("--n", o.n, "nodes per instance");
  exp_cmd->add_option("--eps", o.eps, "target error");
  exp_cmd->add_option("--fp", o.fp, "failure probability");
  exp_cmd->add_option("--seeds", o.seeds, "number of seeds");
  exp_cmd->add_option("--m-train", o.m_train, "training instances (default: sample size)");
  exp_cmd->add_option("--m-test", o.m_test, "test instances (default: m-train)");
  exp_cmd->add_option("--test-seed", o.test_seed, "base seed of the test samples");
  exp_cmd->add_option("--grid", o.grid, "profiler initial grid size");
  exp_cmd->add_option("--eval", o.eval, "transductive | unlabeled | all");

  auto* bound_cmd = app.add_subcommand("bound", "Rademacher bound calculators");
  add_common(bound_cmd, o);
  bound_cmd->add_option("--model", o.model, "sgc | gcan");
  bound_cmd->add_option("--m", o.bound.m);
  bound_cmd->add_option("--d", o.bound.d);
  bound_cmd->add_option("--L", o.bound.L);
  bound_cmd->add_option("--gamma", o.bound.gamma);
  bound_cmd->add_option("--C_dl", o.bound.C_dl);
  bound_cmd->add_option("--C_dh", o.bound.C_dh);
  bound_cmd->add_option("--C_z", o.bound.C_z);
  bound_cmd->add_option("--C_theta", o.bound.C_theta);
  bound_cmd->add_option("--C_w", o.bound.C_w);
  bound_cmd->add_option("--C_U", o.bound.C_U);
  bound_cmd->add_option("--C_V", o.bound.C_V);
  bound_cmd->add_option("--r", o.bound.r);

  try {
    args = merge_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(o, out);
    if (profile_cmd->parsed()) return cmd_profile(o, out);
    if (tune_cmd->parsed()) return cmd_tune(o, out);
    if (gadget_cmd->parsed()) return cmd_gadget(o, out);
    if (shatter_cmd->parsed()) return cmd_shatter(o, out);
    if (exp_cmd->parsed()) return cmd_experiment(o, out);
    if (bound_cmd->parsed()) return cmd_bound(o, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const VerificationFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerificationFailed;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitVerificationFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerificationFailed;
  }
  return kExitInputError;
}

}  // namespace tunelab::cli
