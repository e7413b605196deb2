#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "limip/experiment.hpp"

using namespace limip;
namespace fs = std::filesystem;

namespace {

ExperimentConfig mini_config() {
  ExperimentConfig cfg;
  TaskSpec sc;
  sc.family = Family::SetCover;
  sc.name = "mini";
  sc.seed = 0;  // overwritten by the harness through eval/train mixing
  sc.sc_rows = 8;
  sc.sc_cols = 10;
  sc.sc_density = 0.25;
  cfg.tasks = {sc};
  cfg.gat = {4, 1};
  cfg.lifelong.strategy = Strategy::LiMIP;
  cfg.lifelong.batch = 8;
  cfg.lifelong.kd_batch = 4;
  cfg.lifelong.max_epochs = 2;
  cfg.lifelong.patience = 2;
  cfg.lifelong.buffer_capacity = 12;
  cfg.lifelong.seed = 71;
  cfg.samples_per_task = 24;
  cfg.eval_instances = 3;
  cfg.eval_seeds = 2;
  cfg.eval_node_cap = 60;
  cfg.collect_node_cap = 80;
  cfg.out_dir = "exp_tmp";
  cfg.seed = 71;
  return cfg;
}

struct MiniRun {
  ExperimentConfig cfg;
  RunResult res;
};

const MiniRun& mini() {
  static MiniRun run = [] {
    MiniRun r;
    r.cfg = mini_config();
    fs::remove_all(r.cfg.out_dir);
    r.res = run_experiment(r.cfg);
    return r;
  }();
  return run;
}

}  // namespace

TEST_CASE("single-task run produces the full artifact set") {
  const MiniRun& r = mini();
  const fs::path out(r.cfg.out_dir);
  for (const char* f : {"config_echo.json", "matrix.json", "matrix.csv", "matrix.txt",
                        "train_log.jsonl", "buffer.jsonl", "snapshots.bin",
                        "ckpt_task0.bin", "curve_mini.csv"})
    CHECK(fs::exists(out / f));

  REQUIRE(r.res.matrix.row_names.size() == 1);
  REQUIRE(r.res.matrix.col_names.size() == 1);
  CHECK(r.res.matrix.row_names[0] == "after_mini");
  CHECK(r.res.matrix.col_names[0] == "mini");
  REQUIRE(r.res.matrix.cells.size() == 1);
  REQUIRE(r.res.matrix.cells[0].size() == 1);
  const EvalCell& cell = r.res.matrix.cells[0][0];
  CHECK(cell.geo_nodes >= 1.0);
  CHECK(cell.geo_time >= 0.0);
  CHECK(cell.cap_hits >= 0);

  REQUIRE(r.res.node_runs.size() == 1);
  REQUIRE(r.res.node_runs[0].size() == 1);
  REQUIRE(r.res.node_runs[0][0].size() == 3);
  for (const auto& per_seed : r.res.node_runs[0][0]) {
    REQUIRE(per_seed.size() == 2);
    for (double v : per_seed) CHECK(v >= 1.0);
  }

  // The saved checkpoint reloads to a usable parameter vector.
  GatParams params = load_checkpoint(r.res.checkpoint_paths[0]);
  CHECK(params.cfg.hidden == 4);
  CHECK(params.flat.size() == param_count(params.cfg));

  // The stored buffer and snapshots reload consistently.
  ReplayBuffer buf = read_buffer((out / "buffer.jsonl").string());
  CHECK(buf.capacity == 12);
  CHECK(!buf.entries.empty());
  CHECK(buf.entries.size() <= buf.capacity);
  std::vector<TaskSnapshot> snaps = read_snapshots((out / "snapshots.bin").string());
  REQUIRE(snaps.size() == 1);
  CHECK(snaps[0].theta.size() == params.flat.size());
  CHECK(snaps[0].theta == params.flat);
}

TEST_CASE("matrix json reloads to the in-memory matrix") {
  const MiniRun& r = mini();
  EvalMatrix m = matrix_from_json_file((fs::path(r.cfg.out_dir) / "matrix.json").string());
  REQUIRE(m.row_names == r.res.matrix.row_names);
  REQUIRE(m.col_names == r.res.matrix.col_names);
  for (size_t i = 0; i < m.cells.size(); ++i)
    for (size_t j = 0; j < m.cells[i].size(); ++j) {
      CHECK(m.cells[i][j].geo_nodes == doctest::Approx(r.res.matrix.cells[i][j].geo_nodes));
      CHECK(m.cells[i][j].cap_hits == r.res.matrix.cells[i][j].cap_hits);
    }
  CHECK(m.to_csv() == r.res.matrix.to_csv());
}

TEST_CASE("config echo holds the run settings") {
  const MiniRun& r = mini();
  std::ifstream f(fs::path(r.cfg.out_dir) / "config_echo.json");
  REQUIRE(bool(f));
  nlohmann::json j = nlohmann::json::parse(f);
  CHECK(j.at("version") == kVersionString);
  CHECK(j.at("hidden") == 4);
  CHECK(j.at("strategy") == "limip");
  CHECK(j.at("tasks").size() == 1);
  CHECK(j.at("tasks")[0].at("name") == "mini");
}

TEST_CASE("evaluation is deterministic and isolated from training configuration") {
  const MiniRun& r = mini();
  auto insts = eval_instances_for_task(r.cfg, 0);
  REQUIRE(static_cast<int>(insts.size()) == r.cfg.eval_instances);

  // Same seed, strategy changed: the held-out set is untouched.
  ExperimentConfig other = r.cfg;
  other.lifelong.strategy = Strategy::FT;
  other.lifelong.max_epochs = 9;
  auto insts2 = eval_instances_for_task(other, 0);
  REQUIRE(insts2.size() == insts.size());
  for (size_t k = 0; k < insts.size(); ++k)
    CHECK(instance_to_text(*insts2[k]) == instance_to_text(*insts[k]));

  PolicyFactory mf = named_policy_factory("most_fractional");
  std::vector<std::vector<double>> runs_a, runs_b;
  EvalCell a = evaluate_policy(mf, insts, 2, 60, 42, &runs_a);
  EvalCell b = evaluate_policy(mf, insts, 2, 60, 42, &runs_b);
  CHECK(a.geo_nodes == b.geo_nodes);
  CHECK(a.node_std_pct == b.node_std_pct);
  CHECK(a.cap_hits == b.cap_hits);
  CHECK(runs_a == runs_b);

  CHECK_THROWS_AS(evaluate_policy(mf, {}, 2, 60, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_policy(mf, insts, 0, 60, 1), std::invalid_argument);
  CHECK_THROWS_AS(named_policy_factory("magic"), std::runtime_error);
}

TEST_CASE("collection meets its quota from generated instances") {
  const MiniRun& r = mini();
  std::vector<BranchSample> samples = collect_for_task(r.cfg, 0, 10);
  REQUIRE(samples.size() == 10);
  for (const auto& s : samples) {
    CHECK(!s.cands.empty());
    CHECK(s.action < static_cast<int>(s.cands.size()));
  }
  // Collection is reproducible.
  std::vector<BranchSample> again = collect_for_task(r.cfg, 0, 10);
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(again[i].action == samples[i].action);
    CHECK(again[i].state.var_feats == samples[i].state.var_feats);
  }
}

TEST_CASE("buffer and snapshot files reject corruption") {
  {
    std::ofstream f("bad_buffer.jsonl", std::ios::binary);
    f << "{\"format\":\"other\",\"version\":1,\"capacity\":5,\"stream_count\":0}\n";
  }
  CHECK_THROWS_AS(read_buffer("bad_buffer.jsonl"), std::runtime_error);
  fs::remove("bad_buffer.jsonl");
  {
    std::ofstream f("bad_snaps.bin", std::ios::binary);
    f << "WRONGMAG";
  }
  CHECK_THROWS_AS(read_snapshots("bad_snaps.bin"), std::runtime_error);
  fs::remove("bad_snaps.bin");
  CHECK_THROWS_AS(read_buffer("missing_buffer.jsonl"), std::runtime_error);
  CHECK_THROWS_AS(read_snapshots("missing_snaps.bin"), std::runtime_error);

  // Round trip preserves an empty snapshot list.
  write_snapshots({}, "empty_snaps.bin");
  CHECK(read_snapshots("empty_snaps.bin").empty());
  fs::remove("empty_snaps.bin");
}

TEST_CASE("transfer protocol trains both arms and writes reports") {
  const MiniRun& r = mini();
  ExperimentConfig cfg = r.cfg;
  cfg.eval_instances = 2;
  cfg.eval_seeds = 2;
  TaskSpec lowdata = cfg.tasks[0];
  TransferReport rep = run_transfer(cfg, cfg.out_dir, lowdata, 8);
  CHECK(rep.finetuned.geo_nodes >= 1.0);
  CHECK(rep.scratch.geo_nodes >= 1.0);
  CHECK(rep.baseline.geo_nodes >= 1.0);
  const fs::path out(cfg.out_dir);
  CHECK(fs::exists(out / "transfer.csv"));
  CHECK(fs::exists(out / "transfer.json"));
  CHECK(fs::exists(out / "transfer_log.jsonl"));
  std::ifstream f(out / "transfer.json");
  nlohmann::json j = nlohmann::json::parse(f);
  CHECK(j.at("samples") == 8);
  CHECK(j.at("task").at("name") == "mini");
  // All three arms were scored on the same held-out set with the same seeds.
  CHECK(j.count("finetuned") == 1);
  CHECK(j.count("scratch") == 1);
  CHECK(j.count("most_fractional") == 1);
}

TEST_CASE("transfer task defaults to the final task without a dedicated section") {
  const MiniRun& r = mini();
  ConfigTable empty;
  TaskSpec pick = transfer_task_from_table(empty, r.cfg);
  CHECK(pick.name == "mini");
  ConfigTable with = parse_config_text(
      "[transfer]\n"
      "family = \"is\"\n"
      "affinity = 2\n"
      "size = 9\n");
  TaskSpec explicit_pick = transfer_task_from_table(with, r.cfg);
  CHECK(explicit_pick.family == Family::IndepSet);
  CHECK(explicit_pick.is_size == 9);
  CHECK(explicit_pick.name == "transfer");
}
