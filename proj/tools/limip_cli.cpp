#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "limip/experiment.hpp"

using namespace limip;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Cli {
  std::string config_path;
  std::string out;
  std::string samples_path;
  std::string ckpt_path;
  std::string run_dir;
  std::string strategy;
  std::string policy = "learned";
  int task = -1;
  int quota = -1;
  int transfer_samples = 300;
};

// Loads and validates the experiment config, applying CLI overrides.
// Failures here are config errors (exit 2), not stage failures.
ExperimentConfig load_cfg(const Cli& cli, ConfigTable* table_out = nullptr) {
  ConfigTable table = load_config(cli.config_path);
  ExperimentConfig cfg = experiment_from_table(table);
  if (!cli.strategy.empty()) cfg.lifelong.strategy = strategy_from_string(cli.strategy);
  if (!cli.out.empty()) cfg.out_dir = cli.out;
  if (table_out) *table_out = std::move(table);
  return cfg;
}

size_t require_task(const ExperimentConfig& cfg, int task) {
  if (task < 0 || static_cast<size_t>(task) >= cfg.tasks.size())
    throw std::runtime_error("--task must name a task index in [0, " +
                             std::to_string(cfg.tasks.size() - 1) + "]");
  return static_cast<size_t>(task);
}

int cmd_gen(const Cli& cli) {
  ExperimentConfig cfg = load_cfg(cli);
  std::string dir = cli.out.empty() ? cfg.out_dir + "/instances" : cli.out;
  for (const TaskSpec& spec : cfg.tasks) {
    std::string manifest = gen_suite(spec, dir);
    std::printf("%s: %d instance(s), manifest %s\n", spec.name.c_str(), spec.count,
                manifest.c_str());
  }
  return kExitOk;
}

int cmd_collect(const Cli& cli) {
  ExperimentConfig cfg = load_cfg(cli);
  size_t t = require_task(cfg, cli.task);
  int quota = cli.quota > 0 ? cli.quota : cfg.samples_per_task;
  std::vector<BranchSample> samples = collect_for_task(cfg, t, quota);
  std::string out = cli.out.empty() ? "samples_task" + std::to_string(t) + ".jsonl" : cli.out;
  write_samples(samples, out);
  std::printf("collected %zu samples for task %zu (%s) -> %s\n", samples.size(), t,
              cfg.tasks[t].name.c_str(), out.c_str());
  return kExitOk;
}

int cmd_train(const Cli& cli) {
  ExperimentConfig cfg = load_cfg(cli);
  std::vector<BranchSample> samples = read_samples(cli.samples_path);
  LifelongConfig ft = cfg.lifelong;
  ft.strategy = Strategy::FT;
  GatParams params = init_params(cfg.gat, mix_seed(cfg.seed, "model.init"));
  ReplayBuffer buffer;
  std::vector<TaskSnapshot> snaps;
  std::string out = cli.out.empty() ? "model.ckpt" : cli.out;
  std::ofstream log(out + ".log.jsonl", std::ios::binary);
  TrainResult res = train_task(params, samples, 0, buffer, snaps, ft, &log);
  save_checkpoint(params, out);
  std::printf("trained on %zu samples: %d epoch(s), best val %.4f (top1 %.3f) -> %s\n",
              samples.size(), res.epochs_run, res.best_val, res.val_top1, out.c_str());
  return kExitOk;
}

int cmd_eval(const Cli& cli) {
  ExperimentConfig cfg = load_cfg(cli);
  size_t t = require_task(cfg, cli.task);
  auto insts = eval_instances_for_task(cfg, t);
  GatParams params;
  PolicyFactory make;
  if (cli.policy == "learned") {
    if (cli.ckpt_path.empty())
      throw std::runtime_error("--ckpt is required when evaluating the learned policy");
    params = load_checkpoint(cli.ckpt_path);
    make = learned_policy_factory(params, cfg.lifelong.mode);
  } else {
    make = named_policy_factory(cli.policy);
  }
  EvalCell cell = evaluate_policy(make, insts, cfg.eval_seeds, cfg.eval_node_cap,
                                  mix_seed(cfg.seed, "eval", t));
  json j{{"task", cfg.tasks[t].name},
         {"policy", cli.policy},
         {"geo_nodes", cell.geo_nodes},
         {"geo_time_s", cell.geo_time},
         {"std_pct", cell.node_std_pct},
         {"cap_hits", cell.cap_hits}};
  std::string text = j.dump(2);
  std::printf("%s\n", text.c_str());
  if (!cli.out.empty()) {
    std::ofstream f(cli.out, std::ios::binary);
    f << text << "\n";
  }
  return kExitOk;
}

int cmd_lifelong(const Cli& cli) {
  ExperimentConfig cfg = load_cfg(cli);
  RunResult res = run_experiment(cfg);
  std::printf("%s\n", res.matrix.to_table().c_str());
  std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_transfer(const Cli& cli) {
  ConfigTable table;
  ExperimentConfig cfg = load_cfg(cli, &table);
  TaskSpec lowdata =
      cli.task >= 0 ? cfg.tasks[require_task(cfg, cli.task)] : transfer_task_from_table(table, cfg);
  std::string run = cli.run_dir.empty() ? cfg.out_dir : cli.run_dir;
  TransferReport rep = run_transfer(cfg, run, lowdata, cli.transfer_samples);
  std::printf("transfer on %s with %d samples\n", lowdata.name.c_str(), cli.transfer_samples);
  std::printf("  finetuned       geo nodes %10.2f  geo time %8.4fs\n", rep.finetuned.geo_nodes,
              rep.finetuned.geo_time);
  std::printf("  scratch         geo nodes %10.2f  geo time %8.4fs\n", rep.scratch.geo_nodes,
              rep.scratch.geo_time);
  std::printf("  most_fractional geo nodes %10.2f  geo time %8.4fs\n", rep.baseline.geo_nodes,
              rep.baseline.geo_time);
  return kExitOk;
}

int cmd_report(const Cli& cli) {
  std::string run = cli.run_dir;
  EvalMatrix m = matrix_from_json_file(run + "/matrix.json");
  write_report(m, run);
  std::printf("%s", m.to_table().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lifelong learning-to-branch laboratory"};
  app.require_subcommand(1);
  Cli cli;

  CLI::App* gen = app.add_subcommand("gen", "write instance suites and manifests for every task");
  gen->add_option("--config", cli.config_path, "experiment config file")->required();
  gen->add_option("--out", cli.out, "output directory (default <out_dir>/instances)");

  CLI::App* collect = app.add_subcommand("collect", "record expert branching samples for a task");
  collect->add_option("--config", cli.config_path)->required();
  collect->add_option("--task", cli.task, "task index")->required();
  collect->add_option("--quota", cli.quota, "sample count (default samples_per_task)");
  collect->add_option("--out", cli.out, "output sample file (JSON lines)");

  CLI::App* train = app.add_subcommand("train", "imitation-train a model on a sample file");
  train->add_option("--config", cli.config_path)->required();
  train->add_option("--samples", cli.samples_path, "sample file from collect")->required();
  train->add_option("--out", cli.out, "checkpoint path (default model.ckpt)");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy on a task's held-out set");
  eval->add_option("--config", cli.config_path)->required();
  eval->add_option("--task", cli.task, "task index")->required();
  eval->add_option("--ckpt", cli.ckpt_path, "checkpoint for the learned policy");
  eval->add_option("--policy", cli.policy,
                   "learned | strong | most_fractional | random (default learned)");
  eval->add_option("--out", cli.out, "also write the result JSON here");

  CLI::App* lifelong =
      app.add_subcommand("lifelong", "run the full sequential training + evaluation protocol");
  lifelong->add_option("--config", cli.config_path)->required();
  lifelong->add_option("--strategy", cli.strategy, "ft | er | ewc | limip (overrides config)");
  lifelong->add_option("--out", cli.out, "output directory (overrides config)");

  CLI::App* transfer =
      app.add_subcommand("transfer", "fine-tune a finished run on a low-data task vs scratch");
  transfer->add_option("--config", cli.config_path)->required();
  transfer->add_option("--run", cli.run_dir, "run directory (default config out_dir)");
  transfer->add_option("--task", cli.task, "task index for the low-data task");
  transfer->add_option("--samples", cli.transfer_samples, "low-data sample budget (default 300)");

  CLI::App* report = app.add_subcommand("report", "re-render tables and curves from matrix.json");
  report->add_option("--run", cli.run_dir, "run directory containing matrix.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(cli);
    if (collect->parsed()) return cmd_collect(cli);
    if (train->parsed()) return cmd_train(cli);
    if (eval->parsed()) return cmd_eval(cli);
    if (lifelong->parsed()) return cmd_lifelong(cli);
    if (transfer->parsed()) return cmd_transfer(cli);
    if (report->parsed()) return cmd_report(cli);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    bool config_err = msg.rfind("config", 0) == 0 || msg.find("unknown strategy") == 0 ||
                      msg.find("--task") == 0 || msg.find("unknown encoder mode") == 0 ||
                      msg.find("unknown family") == 0 || msg.find("unknown task preset") == 0 ||
                      msg.find("cannot open config") == 0;
    std::fprintf(stderr, "%s failed: %s\n",
                 app.get_subcommands().empty() ? "command"
                                               : app.get_subcommands().front()->get_name().c_str(),
                 msg.c_str());
    return config_err ? kExitConfig : kExitStage;
  }
  return kExitOk;
}
