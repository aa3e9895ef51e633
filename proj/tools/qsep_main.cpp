// qsep: simulate the Werner-like state experiment, train separability
// classifiers on four correlators, and reproduce the figures.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsep/ann.hpp"
#include "qsep/dataset_io.hpp"
#include "qsep/experiment.hpp"
#include "qsep/harness.hpp"

namespace fs = std::filesystem;
using namespace qsep;

namespace {

enum ExitCode { kOk = 0, kInvalidConfig = 2, kDegenerateData = 3, kPlanMismatch = 4, kRuntime = 1 };

struct Options {
  // calibrate
  double purity = 0.914;
  double concurrence = 0.927;
  // gen
  std::string protocol = "linear";
  bool theory = false;
  std::string plan;
  std::string acquisition = "train";
  bool dump_matrices = false;
  // train
  std::string data;
  std::string arch = "linear";
  int nne = 0;
  double lr = 0.5;
  int epochs = 20000;
  double init = 0.5;
  double threshold = 0.5;
  // eval
  std::string model;
  // reproduce
  std::string figure;
  // shared
  std::uint64_t shots = kDefaultShots;
  std::uint64_t seed = kDefaultSeed;
  std::string source;
  std::string out = ".";
};

// Flattens a JSON config object into "--key value" arguments placed ahead of
// the real command line, so explicit flags win.
std::vector<std::string> config_args(const fs::path& file) {
  const json j = read_json(file);
  if (!j.is_object()) throw std::invalid_argument("--config: expected a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      args.push_back("--" + key);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back("--" + key);
      args.push_back(value.dump());
    } else {
      throw std::invalid_argument("--config: unsupported value for '" + key + "'");
    }
  }
  return args;
}

SourceModel load_source(const Options& o) {
  if (o.source.empty()) return default_source();
  return source_from_json(read_json(o.source));
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.learning_rate = o.lr;
  c.epochs = o.epochs;
  c.init_halfwidth = o.init;
  c.seed = o.seed;
  c.threshold = o.threshold;
  return c;
}

void write_provenance(const fs::path& dir, const std::string& command, json resolved) {
  resolved["command"] = command;
  write_json(dir / "provenance.json", resolved);
}

int cmd_calibrate(const Options& o) {
  const CalibrationResult r = calibrate_source(o.purity, o.concurrence);
  json j = to_json(r.model);
  j["achieved"] = {{"purity", r.purity}, {"concurrence", r.concurrence}};
  j["targets"] = {{"purity", o.purity}, {"concurrence", o.concurrence}};
  write_json(fs::path(o.out) / "source.json", j);
  write_provenance(o.out, "calibrate", {{"purity", o.purity}, {"concurrence", o.concurrence}, {"out", o.out}});
  std::printf("v=%.6f d=%.6f g=%.6f purity=%.6f concurrence=%.6f\n", r.model.v, r.model.d, r.model.g, r.purity,
              r.concurrence);
  return kOk;
}

int cmd_gen(const Options& o) {
  const ProtocolKind kind = protocol_from_string(o.protocol);
  ProtocolSpec spec = kind == ProtocolKind::Linear ? default_linear_spec(o.seed) : default_nonlinear_spec(o.seed);
  spec.shots = o.shots;
  if (!o.plan.empty()) spec.plan = o.plan;
  spec.validate();
  const fs::path dir = o.out;

  std::vector<std::pair<std::string, Dataset>> outputs;
  SourceModel source;
  if (o.theory) {
    if (kind == ProtocolKind::Linear) {
      outputs.emplace_back("theory_linear.csv", gen_theory_dataset(spec, Split::Grid));
    } else {
      outputs.emplace_back("theory_nonlinear_train.csv", gen_theory_dataset(spec, Split::Margin));
      outputs.emplace_back("theory_nonlinear_test.csv", gen_theory_dataset(spec, Split::Grid));
    }
  } else {
    source = load_source(o);
    if (kind == ProtocolKind::Linear) {
      outputs.emplace_back("linear_" + o.acquisition + ".csv", gen_linear_dataset(spec, source, o.acquisition));
    } else {
      TrainTest tt = gen_nonlinear_dataset(spec, source);
      outputs.emplace_back("nonlinear_train.csv", std::move(tt.train));
      outputs.emplace_back("nonlinear_test.csv", std::move(tt.test));
    }
  }
  json files = json::array();
  for (const auto& [name, ds] : outputs) {
    write_dataset(dir / name, to_table(ds));
    if (o.dump_matrices) write_matrices(dir / (fs::path(name).stem().string() + "_matrices.csv"), ds);
    files.push_back(name);
    std::printf("%s: %zu samples\n", (dir / name).c_str(), ds.samples.size());
  }
  write_provenance(dir, "gen",
                   {{"spec", to_json(spec)}, {"theory", o.theory}, {"source", to_json(source)},
                    {"acquisition", o.acquisition}, {"files", files}});
  return kOk;
}

int cmd_train(const Options& o) {
  const DatasetTable table = read_dataset(o.data);
  if (o.arch != "linear" && o.arch != "mlp") throw std::invalid_argument("--arch must be linear or mlp");
  if (o.nne < 0) throw std::invalid_argument("--nne must be non-negative");
  const Arch arch{o.arch == "linear" ? 0 : o.nne};
  const TrainConfig cfg = train_config(o);
  const TrainResult r = train(examples(table), arch, cfg);
  const fs::path dir = o.out;
  const ModelFile mf{r.model, table.plan(), cfg.threshold, cfg, table.sidecar};
  write_json(dir / "model.json", model_json(mf));
  write_json(dir / "train_report.json", json{{"arch", arch.name()},
                                             {"n_ne", arch.n_ne},
                                             {"train_match_rate", r.report.train_match_rate},
                                             {"final_learning_rate", r.report.final_learning_rate},
                                             {"halvings", r.report.halvings},
                                             {"wall_seconds", r.report.wall_seconds},
                                             {"config", to_json(r.report.config)},
                                             {"loss", r.report.loss}});
  write_provenance(dir, "train",
                   {{"data", o.data}, {"arch", arch.name()}, {"n_ne", arch.n_ne}, {"train_config", to_json(cfg)}});
  std::printf("%s n_ne=%d train match rate %.4f, final loss %.6g\n", arch.name().c_str(), arch.n_ne,
              r.report.train_match_rate, r.report.loss.back());
  return kOk;
}

int cmd_eval(const Options& o) {
  const ModelFile model = model_from_json(read_json(o.model));
  const DatasetTable table = read_dataset(o.data);
  const EvalReport report = evaluate(model, table);
  const fs::path dir = o.out;
  write_json(dir / "eval_report.json", to_json(report));
  write_text(dir / "mismatches.csv", mismatch_csv(report.model));
  write_provenance(dir, "eval", {{"model", o.model}, {"data", o.data}});
  std::printf("%s match rate %.4f (%zu mismatches)\n", report.model.name.c_str(), report.model.overall,
              report.model.mismatches.size());
  if (report.baseline)
    std::printf("standard CHSH match rate %.4f\n", report.baseline->overall);
  return kOk;
}

int cmd_reproduce(const Options& o) {
  ReproduceOptions r = default_reproduce_options(o.seed);
  r.shots = o.shots;
  r.source = load_source(o);
  r.train = train_config(o);
  const Artifacts a = reproduce(o.figure, r);
  write_artifacts(o.out, a);
  for (const auto& [name, _] : a) std::printf("%s\n", (fs::path(o.out) / name).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsep: machine-learned separability from four CHSH correlators"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Options o;
  std::string config;

  auto add_shared = [&](CLI::App* sub) {
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--config", config, "JSON file with option values");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* calibrate = app.add_subcommand("calibrate", "fit the source noise model to purity/concurrence targets");
  add_shared(calibrate);
  calibrate->add_option("--purity", o.purity, "target purity");
  calibrate->add_option("--concurrence", o.concurrence, "target concurrence");

  auto* gen = app.add_subcommand("gen", "generate labeled datasets");
  add_shared(gen);
  gen->add_option("--protocol", o.protocol, "linear | nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
  gen->add_flag("--theory", o.theory, "noiseless ideal states, exact labels");
  gen->add_option("--shots", o.shots, "events per setting")->check(CLI::PositiveNumber);
  gen->add_option("--seed", o.seed, "master seed");
  gen->add_option("--plan", o.plan, "measurement plan (xz | xyz)");
  gen->add_option("--source", o.source, "source model JSON from calibrate");
  gen->add_option("--acquisition", o.acquisition, "acquisition tag for linear data (train | test)");
  gen->add_flag("--dump-matrices", o.dump_matrices, "also write reconstructed matrices");

  auto* train_cmd = app.add_subcommand("train", "train a classifier on a dataset CSV");
  add_shared(train_cmd);
  train_cmd->add_option("--data", o.data, "training CSV")->required();
  train_cmd->add_option("--arch", o.arch, "linear | mlp")->check(CLI::IsMember({"linear", "mlp"}));
  train_cmd->add_option("--nne", o.nne, "hidden neurons (mlp; 0 means linear)");
  train_cmd->add_option("--lr", o.lr, "learning rate");
  train_cmd->add_option("--epochs", o.epochs, "full-batch epochs");
  train_cmd->add_option("--init", o.init, "uniform init half-width");
  train_cmd->add_option("--seed", o.seed, "initialization seed");
  train_cmd->add_option("--threshold", o.threshold, "decision threshold");

  auto* eval = app.add_subcommand("eval", "score a model on a dataset CSV");
  add_shared(eval);
  eval->add_option("--model", o.model, "model JSON")->required();
  eval->add_option("--data", o.data, "test CSV")->required();

  auto* repro = app.add_subcommand("reproduce", "run the pipeline behind a figure");
  add_shared(repro);
  repro->add_option("figure", o.figure, "fig3 | fig4 | fig5 | figS1")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "fig5", "figS1"}));
  repro->add_option("--shots", o.shots, "events per setting")->check(CLI::PositiveNumber);
  repro->add_option("--seed", o.seed, "master seed");
  repro->add_option("--source", o.source, "source model JSON from calibrate");
  repro->add_option("--epochs", o.epochs, "full-batch epochs");
  repro->add_option("--lr", o.lr, "learning rate");

  // Splice --config values in front of the explicit arguments.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") {
        auto extra = config_args(args[i + 1]);
        args.erase(args.begin() + long(i), args.begin() + long(i) + 2);
        // Insert right after the subcommand name.
        args.insert(args.begin() + 1, extra.begin(), extra.end());
        break;
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  }

  try {
    if (*calibrate) return cmd_calibrate(o);
    if (*gen) return cmd_gen(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*repro) return cmd_reproduce(o);
  } catch (const PlanMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPlanMismatch;
  } catch (const DegenerateDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDegenerateData;
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kInvalidConfig;
}
