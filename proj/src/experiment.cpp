#include "limip/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace limip {

namespace {

EncoderMode mode_from_string(const std::string& s) {
  if (s == "attention") return EncoderMode::Attention;
  if (s == "meanpool") return EncoderMode::MeanPool;
  throw std::runtime_error("unknown encoder mode '" + s + "' (expected attention or meanpool)");
}

std::string mode_name(EncoderMode m) {
  return m == EncoderMode::Attention ? "attention" : "meanpool";
}

TaskSpec task_from_section(const ConfigTable& t, const std::string& sec,
                           const std::string& default_name, uint64_t default_seed) {
  TaskSpec spec;
  spec.family = family_from_string(cfg_str_req(t, sec, "family"));
  switch (spec.family) {
    case Family::SetCover: {
      TaskSpec d = desk_sequence(Family::SetCover)[0];
      spec.sc_rows = static_cast<int>(cfg_int(t, sec, "rows", d.sc_rows));
      spec.sc_cols = static_cast<int>(cfg_int(t, sec, "cols", d.sc_cols));
      spec.sc_density = cfg_num(t, sec, "density", d.sc_density);
      break;
    }
    case Family::IndepSet: {
      TaskSpec d = desk_sequence(Family::IndepSet)[0];
      spec.is_affinity = static_cast<int>(cfg_int(t, sec, "affinity", d.is_affinity));
      spec.is_size = static_cast<int>(cfg_int(t, sec, "size", d.is_size));
      break;
    }
    case Family::FacilityLoc: {
      TaskSpec d = desk_sequence(Family::FacilityLoc)[0];
      spec.fc_customers = static_cast<int>(cfg_int(t, sec, "customers", d.fc_customers));
      spec.fc_facilities = static_cast<int>(cfg_int(t, sec, "facilities", d.fc_facilities));
      spec.fc_cap_lo = static_cast<int>(cfg_int(t, sec, "cap_lo", d.fc_cap_lo));
      spec.fc_cap_hi = static_cast<int>(cfg_int(t, sec, "cap_hi", d.fc_cap_hi));
      spec.fc_dem_lo = static_cast<int>(cfg_int(t, sec, "dem_lo", d.fc_dem_lo));
      spec.fc_dem_hi = static_cast<int>(cfg_int(t, sec, "dem_hi", d.fc_dem_hi));
      spec.fc_max_served = static_cast<int>(cfg_int(t, sec, "max_served", 0));
      break;
    }
  }
  spec.name = cfg_str(t, sec, "name", default_name);
  spec.count = static_cast<int>(cfg_int(t, sec, "count", 10));
  spec.seed = static_cast<uint64_t>(cfg_int(t, sec, "seed", static_cast<int64_t>(default_seed)));
  std::string err = validate_spec(spec);
  if (!err.empty()) throw std::runtime_error("config [" + sec + "]: " + err);
  return spec;
}

std::vector<TaskSpec> preset_tasks(const std::string& preset) {
  if (preset == "sc_desk") return desk_sequence(Family::SetCover);
  if (preset == "is_desk") return desk_sequence(Family::IndepSet);
  if (preset == "fc_desk") return desk_sequence(Family::FacilityLoc);
  if (preset == "sc_full") return full_sequence(Family::SetCover);
  if (preset == "is_full") return full_sequence(Family::IndepSet);
  if (preset == "fc_full") return full_sequence(Family::FacilityLoc);
  throw std::runtime_error("unknown task preset '" + preset +
                           "' (expected one of: sc_desk, is_desk, fc_desk, sc_full, is_full, "
                           "fc_full)");
}

}  // namespace

ExperimentConfig experiment_from_table(const ConfigTable& t) {
  ExperimentConfig cfg;
  cfg.seed = static_cast<uint64_t>(cfg_int(t, "experiment", "seed", 1));
  cfg.out_dir = cfg_str(t, "experiment", "out_dir", "runs/out");
  cfg.samples_per_task = static_cast<int>(cfg_int(t, "experiment", "samples_per_task", 2000));
  cfg.eval_instances = static_cast<int>(cfg_int(t, "experiment", "eval_instances", 20));
  cfg.eval_seeds = static_cast<int>(cfg_int(t, "experiment", "eval_seeds", 5));
  cfg.eval_node_cap = cfg_int(t, "experiment", "eval_node_cap", 20000);
  cfg.collect_node_cap = cfg_int(t, "experiment", "collect_node_cap", 400);
  cfg.explore_prob = cfg_num(t, "experiment", "explore_prob", 0.05);

  cfg.gat.hidden = static_cast<int>(cfg_int(t, "model", "hidden", 32));
  cfg.gat.heads = static_cast<int>(cfg_int(t, "model", "heads", 2));
  if (cfg.gat.hidden < 1 || cfg.gat.heads < 1)
    throw std::runtime_error("config [model]: hidden and heads must be >= 1");

  LifelongConfig& lc = cfg.lifelong;
  lc.strategy = strategy_from_string(cfg_str(t, "experiment", "strategy", "limip"));
  lc.mode = mode_from_string(cfg_str(t, "experiment", "mode", "attention"));
  lc.adam.lr = cfg_num(t, "train", "lr", 0.001);
  lc.batch = static_cast<int>(cfg_int(t, "train", "batch", 32));
  lc.kd_batch = static_cast<int>(cfg_int(t, "train", "kd_batch", 32));
  lc.max_epochs = static_cast<int>(cfg_int(t, "train", "max_epochs", 60));
  lc.patience = static_cast<int>(cfg_int(t, "train", "patience", 8));
  lc.val_frac = cfg_num(t, "train", "val_frac", 0.1);
  lc.kd_weight = cfg_num(t, "train", "kd_weight", 1.5);
  lc.ewc_weight = cfg_num(t, "train", "ewc_weight", 100.0);
  lc.ewc_only_weight = cfg_num(t, "train", "ewc_only_weight", 1000.0);
  lc.buffer_capacity = static_cast<size_t>(cfg_int(t, "train", "buffer_capacity", 500));
  lc.kd_logits_at_insertion = cfg_bool(t, "train", "kd_logits_at_insertion", false);
  lc.seed = cfg.seed;

  std::string preset = cfg_str(t, "experiment", "tasks_preset", "");
  std::vector<std::pair<long, std::string>> task_secs;
  for (const auto& [sec, _] : t)
    if (sec.rfind("task.", 0) == 0) {
      const std::string idx = sec.substr(5);
      char* end = nullptr;
      long n = std::strtol(idx.c_str(), &end, 10);
      if (!end || *end != '\0')
        throw std::runtime_error("config: bad task section name [" + sec + "]");
      task_secs.emplace_back(n, sec);
    }
  std::sort(task_secs.begin(), task_secs.end());
  if (!preset.empty()) {
    if (!task_secs.empty())
      throw std::runtime_error("config: tasks_preset and [task.N] sections are exclusive");
    cfg.tasks = preset_tasks(preset);
    for (size_t i = 0; i < cfg.tasks.size(); ++i)
      cfg.tasks[i].seed = mix_seed(cfg.seed, "task.seed", i);
  } else {
    for (const auto& [n, sec] : task_secs) {
      std::string dflt = "task" + std::to_string(n);
      cfg.tasks.push_back(task_from_section(
          t, sec, dflt, mix_seed(cfg.seed, "task.seed", static_cast<uint64_t>(n))));
    }
  }
  if (cfg.tasks.empty())
    throw std::runtime_error("config: no tasks (add [task.0] or tasks_preset)");
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_table(load_config(path));
}

std::string experiment_to_json(const ExperimentConfig& cfg) {
  json j;
  j["version"] = kVersionString;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["samples_per_task"] = cfg.samples_per_task;
  j["eval_instances"] = cfg.eval_instances;
  j["eval_seeds"] = cfg.eval_seeds;
  j["eval_node_cap"] = cfg.eval_node_cap;
  j["collect_node_cap"] = cfg.collect_node_cap;
  j["explore_prob"] = cfg.explore_prob;
  j["hidden"] = cfg.gat.hidden;
  j["heads"] = cfg.gat.heads;
  j["strategy"] = strategy_name(cfg.lifelong.strategy);
  j["mode"] = mode_name(cfg.lifelong.mode);
  j["lr"] = cfg.lifelong.adam.lr;
  j["batch"] = cfg.lifelong.batch;
  j["kd_batch"] = cfg.lifelong.kd_batch;
  j["max_epochs"] = cfg.lifelong.max_epochs;
  j["patience"] = cfg.lifelong.patience;
  j["val_frac"] = cfg.lifelong.val_frac;
  j["kd_weight"] = cfg.lifelong.kd_weight;
  j["ewc_weight"] = cfg.lifelong.ewc_weight;
  j["ewc_only_weight"] = cfg.lifelong.ewc_only_weight;
  j["buffer_capacity"] = cfg.lifelong.buffer_capacity;
  j["kd_logits_at_insertion"] = cfg.lifelong.kd_logits_at_insertion;
  json tasks = json::array();
  for (const auto& spec : cfg.tasks) tasks.push_back(json::parse(spec_to_json(spec)));
  j["tasks"] = tasks;
  return j.dump(2);
}

std::vector<std::shared_ptr<const MilpInstance>> eval_instances_for_task(
    const ExperimentConfig& cfg, size_t task_index) {
  TaskSpec spec = cfg.tasks.at(task_index);
  spec.seed = mix_seed(cfg.seed, "eval.inst", task_index);
  std::vector<std::shared_ptr<const MilpInstance>> out;
  for (int k = 0; k < cfg.eval_instances; ++k)
    out.push_back(std::make_shared<MilpInstance>(gen_instance(spec, static_cast<uint64_t>(k))));
  return out;
}

namespace {

std::vector<BranchSample> collect_from_spec(TaskSpec spec, int quota, double explore_prob,
                                            long node_cap, uint64_t collect_seed) {
  std::vector<BranchSample> out;
  uint64_t idx = 0;
  const uint64_t kMaxInstances = 10000;
  const int kBatch = 8;
  while (static_cast<int>(out.size()) < quota) {
    if (idx >= kMaxInstances)
      throw std::runtime_error("sample collection exhausted " + std::to_string(kMaxInstances) +
                               " instances before reaching the quota");
    std::vector<std::shared_ptr<const MilpInstance>> insts;
    for (int k = 0; k < kBatch; ++k)
      insts.push_back(std::make_shared<MilpInstance>(gen_instance(spec, idx++)));
    CollectConfig cc;
    cc.quota = quota - static_cast<int>(out.size());
    cc.explore_prob = explore_prob;
    cc.seed = mix_seed(collect_seed, "collect.wave", idx);
    cc.limits.node_cap = node_cap;
    std::vector<BranchSample> got = collect_samples(insts, cc);
    out.insert(out.end(), std::make_move_iterator(got.begin()),
               std::make_move_iterator(got.end()));
  }
  out.resize(static_cast<size_t>(quota));
  return out;
}

}  // namespace

std::vector<BranchSample> collect_for_task(const ExperimentConfig& cfg, size_t task_index,
                                           int quota) {
  TaskSpec spec = cfg.tasks.at(task_index);
  spec.seed = mix_seed(cfg.seed, "train.inst", task_index);
  return collect_from_spec(spec, quota, cfg.explore_prob, cfg.collect_node_cap,
                           mix_seed(cfg.seed, "collect", task_index));
}

PolicyFactory learned_policy_factory(const GatParams& params, EncoderMode mode) {
  const GatParams* p = &params;
  return [p, mode](uint64_t) { return std::make_unique<LearnedPolicy>(*p, mode); };
}

PolicyFactory named_policy_factory(const std::string& name) {
  if (name == "strong")
    return [](uint64_t) { return std::make_unique<StrongBranchPolicy>(); };
  if (name == "most_fractional")
    return [](uint64_t) { return std::make_unique<MostFractionalPolicy>(); };
  if (name == "random")
    return [](uint64_t s) { return std::make_unique<RandomPolicy>(s); };
  throw std::runtime_error("unknown policy '" + name +
                           "' (expected one of: strong, most_fractional, random)");
}

EvalCell evaluate_policy(const PolicyFactory& make,
                         const std::vector<std::shared_ptr<const MilpInstance>>& insts,
                         int eval_seeds, long node_cap, uint64_t seed_base,
                         std::vector<std::vector<double>>* node_runs) {
  if (insts.empty()) throw std::invalid_argument("evaluate_policy: no instances");
  if (eval_seeds < 1) throw std::invalid_argument("evaluate_policy: eval_seeds must be >= 1");
  const size_t k = insts.size();
  std::vector<std::vector<double>> nodes(k, std::vector<double>(eval_seeds, 0.0));
  std::vector<std::vector<double>> times(k, std::vector<double>(eval_seeds, 0.0));
  EvalCell cell;
  for (int s = 0; s < eval_seeds; ++s) {
    std::vector<size_t> order(k);
    std::iota(order.begin(), order.end(), size_t{0});
    Rng ord = derive_rng(seed_base, "eval.order", static_cast<uint64_t>(s));
    ord.shuffle(order);
    for (size_t i : order) {
      uint64_t run_seed = mix_seed(seed_base, "eval.run", i * 1000003ULL + static_cast<uint64_t>(s));
      std::unique_ptr<BranchingPolicy> pol = make(run_seed);
      BnbLimits lim;
      lim.node_cap = node_cap;
      lim.seed = run_seed;
      SolveReport rep = solve_mip(insts[i], *pol, lim);
      nodes[i][static_cast<size_t>(s)] = static_cast<double>(rep.node_count);
      times[i][static_cast<size_t>(s)] = rep.wall_s;
      if (rep.status == MipStatus::Limit) ++cell.cap_hits;
    }
  }
  std::vector<double> flat_nodes, flat_times;
  for (size_t i = 0; i < k; ++i)
    for (int s = 0; s < eval_seeds; ++s) {
      flat_nodes.push_back(nodes[i][static_cast<size_t>(s)]);
      flat_times.push_back(times[i][static_cast<size_t>(s)]);
    }
  cell.geo_nodes = shifted_geomean(flat_nodes, 1.0);
  cell.geo_time = shifted_geomean(flat_times, 1.0);
  cell.node_std_pct = stdpct(nodes);
  if (node_runs) *node_runs = std::move(nodes);
  return cell;
}

namespace {

json cell_to_json(const EvalCell& c) {
  return json{{"geo_nodes", c.geo_nodes},
              {"geo_time_s", c.geo_time},
              {"std_pct", c.node_std_pct},
              {"cap_hits", c.cap_hits}};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  write_text_file(out / "config_echo.json", experiment_to_json(cfg) + "\n");

  const size_t T = cfg.tasks.size();
  std::vector<std::vector<std::shared_ptr<const MilpInstance>>> eval_sets;
  for (size_t u = 0; u < T; ++u) eval_sets.push_back(eval_instances_for_task(cfg, u));

  GatParams params = init_params(cfg.gat, mix_seed(cfg.seed, "model.init"));
  ReplayBuffer buffer;
  std::vector<TaskSnapshot> snapshots;
  std::ofstream log(out / "train_log.jsonl", std::ios::binary);
  if (!log) throw std::runtime_error("cannot write train_log.jsonl");

  RunResult res;
  res.matrix.col_names.reserve(T);
  for (const auto& t : cfg.tasks) res.matrix.col_names.push_back(t.name);

  for (size_t t = 0; t < T; ++t) {
    std::vector<BranchSample> samples =
        collect_for_task(cfg, t, cfg.samples_per_task);
    train_task(params, samples, static_cast<int>(t), buffer, snapshots, cfg.lifelong, &log);
    log.flush();

    std::string ckpt = (out / ("ckpt_task" + std::to_string(t) + ".bin")).string();
    save_checkpoint(params, ckpt);
    res.checkpoint_paths.push_back(ckpt);

    res.matrix.row_names.push_back("after_" + cfg.tasks[t].name);
    res.matrix.cells.emplace_back();
    res.node_runs.emplace_back();
    PolicyFactory make = learned_policy_factory(params, cfg.lifelong.mode);
    for (size_t u = 0; u < T; ++u) {
      std::vector<std::vector<double>> runs;
      EvalCell cell = evaluate_policy(make, eval_sets[u], cfg.eval_seeds, cfg.eval_node_cap,
                                      mix_seed(cfg.seed, "eval", u), &runs);
      res.matrix.cells.back().push_back(cell);
      res.node_runs.back().push_back(std::move(runs));
    }
  }

  write_report(res.matrix, cfg.out_dir);

  json mj;
  mj["version"] = kVersionString;
  mj["config"] = json::parse(experiment_to_json(cfg));
  mj["row_names"] = res.matrix.row_names;
  mj["col_names"] = res.matrix.col_names;
  json cells = json::array();
  for (const auto& row : res.matrix.cells) {
    json jr = json::array();
    for (const EvalCell& c : row) jr.push_back(cell_to_json(c));
    cells.push_back(jr);
  }
  mj["cells"] = cells;
  mj["node_runs"] = res.node_runs;
  write_text_file(out / "matrix.json", mj.dump(2) + "\n");

  write_buffer(buffer, (out / "buffer.jsonl").string());
  write_snapshots(snapshots, (out / "snapshots.bin").string());
  return res;
}

TransferReport run_transfer(const ExperimentConfig& cfg, const std::string& run_dir,
                            const TaskSpec& lowdata, int samples) {
  std::string err = validate_spec(lowdata);
  if (!err.empty()) throw std::runtime_error("transfer task: " + err);
  const fs::path run(run_dir);
  std::string final_ckpt =
      (run / ("ckpt_task" + std::to_string(cfg.tasks.size() - 1) + ".bin")).string();
  GatParams tuned = load_checkpoint(final_ckpt);

  TaskSpec collect_spec = lowdata;
  collect_spec.seed = mix_seed(cfg.seed, "transfer.inst");
  std::vector<BranchSample> data =
      collect_from_spec(collect_spec, samples, cfg.explore_prob, cfg.collect_node_cap,
                        mix_seed(cfg.seed, "transfer.collect"));

  TaskSpec eval_spec = lowdata;
  eval_spec.seed = mix_seed(cfg.seed, "transfer.eval");
  std::vector<std::shared_ptr<const MilpInstance>> eval_set;
  for (int k = 0; k < cfg.eval_instances; ++k)
    eval_set.push_back(
        std::make_shared<MilpInstance>(gen_instance(eval_spec, static_cast<uint64_t>(k))));

  LifelongConfig ft = cfg.lifelong;
  ft.strategy = Strategy::FT;
  ft.seed = mix_seed(cfg.seed, "transfer.train");

  std::ofstream log(run / "transfer_log.jsonl", std::ios::binary);
  ReplayBuffer scratch_buf;
  std::vector<TaskSnapshot> scratch_snaps;

  TransferReport rep;
  const uint64_t eval_seed = mix_seed(cfg.seed, "transfer.evalseed");
  {
    GatParams arm = tuned;
    ReplayBuffer buf;
    std::vector<TaskSnapshot> snaps;
    if (samples > 0) train_task(arm, data, 1000, buf, snaps, ft, &log);
    rep.finetuned = evaluate_policy(learned_policy_factory(arm, ft.mode), eval_set,
                                    cfg.eval_seeds, cfg.eval_node_cap, eval_seed);
  }
  {
    GatParams arm = init_params(cfg.gat, mix_seed(cfg.seed, "transfer.scratch"));
    if (samples > 0) train_task(arm, data, 1001, scratch_buf, scratch_snaps, ft, &log);
    rep.scratch = evaluate_policy(learned_policy_factory(arm, ft.mode), eval_set,
                                  cfg.eval_seeds, cfg.eval_node_cap, eval_seed);
  }
  rep.baseline = evaluate_policy(named_policy_factory("most_fractional"), eval_set,
                                 cfg.eval_seeds, cfg.eval_node_cap, eval_seed);

  std::ostringstream csv;
  csv << "arm,geo_nodes,geo_time_s,std_pct,cap_hits\n";
  auto emit = [&csv](const char* nm, const EvalCell& c) {
    char buf[96];
    snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.3f,%ld\n", nm, c.geo_nodes, c.geo_time,
             c.node_std_pct, c.cap_hits);
    csv << buf;
  };
  emit("finetuned", rep.finetuned);
  emit("scratch", rep.scratch);
  emit("most_fractional", rep.baseline);
  write_text_file(run / "transfer.csv", csv.str());
  json tj;
  tj["version"] = kVersionString;
  tj["task"] = json::parse(spec_to_json(lowdata));
  tj["samples"] = samples;
  tj["finetuned"] = cell_to_json(rep.finetuned);
  tj["scratch"] = cell_to_json(rep.scratch);
  tj["most_fractional"] = cell_to_json(rep.baseline);
  write_text_file(run / "transfer.json", tj.dump(2) + "\n");
  return rep;
}

TaskSpec transfer_task_from_table(const ConfigTable& table, const ExperimentConfig& cfg) {
  if (table.count("transfer"))
    return task_from_section(table, "transfer", "transfer", mix_seed(cfg.seed, "task.transfer"));
  return cfg.tasks.back();
}

EvalMatrix matrix_from_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  json j = json::parse(f);
  EvalMatrix m;
  m.row_names = j.at("row_names").get<std::vector<std::string>>();
  m.col_names = j.at("col_names").get<std::vector<std::string>>();
  for (const auto& jr : j.at("cells")) {
    m.cells.emplace_back();
    for (const auto& jc : jr) {
      EvalCell c;
      c.geo_nodes = jc.at("geo_nodes").get<double>();
      c.geo_time = jc.at("geo_time_s").get<double>();
      c.node_std_pct = jc.at("std_pct").get<double>();
      c.cap_hits = jc.at("cap_hits").get<long>();
      m.cells.back().push_back(c);
    }
    if (m.cells.back().size() != m.col_names.size())
      throw std::runtime_error("matrix json: ragged cell row");
  }
  if (m.cells.size() != m.row_names.size())
    throw std::runtime_error("matrix json: row count mismatch");
  return m;
}

void write_report(const EvalMatrix& matrix, const std::string& run_dir) {
  fs::create_directories(run_dir);
  const fs::path out(run_dir);
  write_text_file(out / "matrix.csv", matrix.to_csv());
  write_text_file(out / "matrix.txt", matrix.to_table());
  for (size_t u = 0; u < matrix.col_names.size(); ++u) {
    std::ostringstream curve;
    curve << "checkpoint,geo_nodes,geo_time_s,std_pct,cap_hits\n";
    for (size_t r = 0; r < matrix.cells.size(); ++r) {
      const EvalCell& c = matrix.cells[r][u];
      char buf[160];
      snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.3f,%ld\n", matrix.row_names[r].c_str(),
               c.geo_nodes, c.geo_time, c.node_std_pct, c.cap_hits);
      curve << buf;
    }
    write_text_file(out / ("curve_" + matrix.col_names[u] + ".csv"), curve.str());
  }
}

void write_buffer(const ReplayBuffer& buf, const std::string& path) {
  std::ostringstream os;
  json hdr{{"format", "limip-buffer"},
           {"version", 1},
           {"capacity", buf.capacity},
           {"stream_count", buf.stream_count}};
  os << hdr.dump() << "\n";
  for (const ReplayEntry& e : buf.entries) {
    json j{{"task", e.task}, {"action", e.action}, {"z", e.z},
           {"state", branch_state_to_json(e.state)}};
    os << j.dump() << "\n";
  }
  write_text_file(path, os.str());
}

ReplayBuffer read_buffer(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("buffer file empty: " + path);
  json hdr = json::parse(line);
  if (hdr.at("format").get<std::string>() != "limip-buffer" || hdr.at("version").get<int>() != 1)
    throw std::runtime_error("buffer file has unknown format/version: " + path);
  ReplayBuffer buf;
  buf.capacity = hdr.at("capacity").get<size_t>();
  buf.stream_count = hdr.at("stream_count").get<uint64_t>();
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ReplayEntry e;
    e.task = j.at("task").get<int>();
    e.action = j.at("action").get<int>();
    e.z = j.at("z").get<std::vector<double>>();
    e.state = branch_state_from_json(j.at("state"));
    buf.entries.push_back(std::move(e));
  }
  if (buf.entries.size() > buf.capacity)
    throw std::runtime_error("buffer file exceeds its declared capacity: " + path);
  return buf;
}

namespace {
constexpr char kSnapMagic[8] = {'L', 'I', 'M', 'I', 'P', 'S', 'N', '1'};
}

void write_snapshots(const std::vector<TaskSnapshot>& snaps, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(kSnapMagic, 8);
  uint64_t n = snaps.size();
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const TaskSnapshot& s : snaps) {
    int32_t task = s.task;
    uint64_t p = s.theta.size();
    if (s.omega.size() != p) throw std::invalid_argument("snapshot theta/omega length mismatch");
    f.write(reinterpret_cast<const char*>(&task), sizeof task);
    f.write(reinterpret_cast<const char*>(&p), sizeof p);
    f.write(reinterpret_cast<const char*>(s.theta.data()),
            static_cast<std::streamsize>(p * sizeof(double)));
    f.write(reinterpret_cast<const char*>(s.omega.data()),
            static_cast<std::streamsize>(p * sizeof(double)));
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<TaskSnapshot> read_snapshots(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kSnapMagic, 8) != 0)
    throw std::runtime_error("snapshot file has bad magic: " + path);
  uint64_t n = 0;
  f.read(reinterpret_cast<char*>(&n), sizeof n);
  std::vector<TaskSnapshot> out;
  for (uint64_t i = 0; i < n; ++i) {
    TaskSnapshot s;
    int32_t task = 0;
    uint64_t p = 0;
    f.read(reinterpret_cast<char*>(&task), sizeof task);
    f.read(reinterpret_cast<char*>(&p), sizeof p);
    if (!f) throw std::runtime_error("snapshot file truncated: " + path);
    s.task = task;
    s.theta.resize(p);
    s.omega.resize(p);
    f.read(reinterpret_cast<char*>(s.theta.data()), static_cast<std::streamsize>(p * sizeof(double)));
    f.read(reinterpret_cast<char*>(s.omega.data()), static_cast<std::streamsize>(p * sizeof(double)));
    if (!f) throw std::runtime_error("snapshot file truncated: " + path);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace limip
