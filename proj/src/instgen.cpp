#include "limip/instgen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace limip {

namespace {

std::string default_name(Family f) {
  switch (f) {
    case Family::SetCover: return "sc";
    case Family::IndepSet: return "is";
    case Family::FacilityLoc: return "fc";
  }
  return "?";
}

std::string instance_name(const TaskSpec& spec, uint64_t index) {
  std::string base = spec.name.empty() ? default_name(spec.family) : spec.name;
  return base + "_" + std::to_string(index);
}

void require_valid(const TaskSpec& spec) {
  std::string err = validate_spec(spec);
  if (!err.empty()) throw std::invalid_argument("task spec: " + err);
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::SetCover: return "sc";
    case Family::IndepSet: return "is";
    case Family::FacilityLoc: return "fc";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "sc") return Family::SetCover;
  if (s == "is") return Family::IndepSet;
  if (s == "fc") return Family::FacilityLoc;
  throw std::invalid_argument("unknown family '" + s + "' (expected one of: sc, is, fc)");
}

std::string validate_spec(const TaskSpec& spec) {
  if (spec.count < 1) return "count must be >= 1";
  for (char c : spec.name)
    if (std::isspace(static_cast<unsigned char>(c))) return "name must not contain whitespace";
  switch (spec.family) {
    case Family::SetCover:
      if (spec.sc_rows < 1) return "sc_rows must be >= 1";
      if (spec.sc_cols < 2) return "sc_cols must be >= 2";
      if (!(spec.sc_density > 0.0 && spec.sc_density < 1.0))
        return "sc_density must lie in (0,1)";
      break;
    case Family::IndepSet:
      if (spec.is_affinity < 1) return "is_affinity must be >= 1";
      if (spec.is_size <= spec.is_affinity) return "is_size must exceed is_affinity";
      break;
    case Family::FacilityLoc:
      if (spec.fc_customers < 1) return "fc_customers must be >= 1";
      if (spec.fc_facilities < 1) return "fc_facilities must be >= 1";
      if (spec.fc_cap_lo < 0 || spec.fc_cap_lo > spec.fc_cap_hi)
        return "capacity range must satisfy 0 <= lo <= hi";
      if (spec.fc_dem_lo < 0 || spec.fc_dem_lo > spec.fc_dem_hi)
        return "demand range must satisfy 0 <= lo <= hi";
      if (spec.fc_max_served < 0) return "fc_max_served must be >= 0";
      break;
  }
  return "";
}

MilpInstance gen_set_cover(const TaskSpec& spec, uint64_t index) {
  require_valid(spec);
  const int R = spec.sc_rows, C = spec.sc_cols;
  Rng rng = derive_rng(spec.seed, "gen.sc", index);

  std::vector<uint8_t> mem(static_cast<size_t>(R) * C, 0);
  std::vector<int> row_cov(R, 0), col_cov(C, 0);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c)
      if (rng.uniform() < spec.sc_density) {
        mem[static_cast<size_t>(r) * C + c] = 1;
        ++row_cov[r];
        ++col_cov[c];
      }
  // Repair only adds memberships, so each pass preserves the other's goal.
  for (int r = 0; r < R; ++r)
    while (row_cov[r] < 2) {
      int c = static_cast<int>(rng.below(static_cast<uint64_t>(C)));
      if (!mem[static_cast<size_t>(r) * C + c]) {
        mem[static_cast<size_t>(r) * C + c] = 1;
        ++row_cov[r];
        ++col_cov[c];
      }
    }
  for (int c = 0; c < C; ++c)
    while (col_cov[c] < 1) {
      int r = static_cast<int>(rng.below(static_cast<uint64_t>(R)));
      if (!mem[static_cast<size_t>(r) * C + c]) {
        mem[static_cast<size_t>(r) * C + c] = 1;
        ++row_cov[r];
        ++col_cov[c];
      }
    }

  MilpInstance inst;
  inst.name = instance_name(spec, index);
  inst.num_vars = C;
  inst.num_int = C;
  inst.obj.resize(C);
  for (int c = 0; c < C; ++c) inst.obj[c] = static_cast<double>(rng.uniform_int(1, 100));
  inst.lower.assign(C, 0.0);
  inst.upper.assign(C, 1.0);
  // Cover rows sum x_j >= 1, stored negated as <=.
  for (int r = 0; r < R; ++r) {
    std::vector<MilpInstance::Entry> row;
    for (int c = 0; c < C; ++c)
      if (mem[static_cast<size_t>(r) * C + c]) row.push_back({c, -1.0});
    inst.rows.push_back(std::move(row));
    inst.rhs.push_back(-1.0);
  }
  return inst;
}

MilpInstance gen_indep_set(const TaskSpec& spec, uint64_t index) {
  require_valid(spec);
  const int A = spec.is_affinity, S = spec.is_size;
  Rng rng = derive_rng(spec.seed, "gen.is", index);

  std::vector<std::pair<int, int>> edges;
  std::vector<int> targets;
  for (int u = 0; u < A; ++u)
    for (int v = u + 1; v < A; ++v) {
      edges.emplace_back(u, v);
      targets.push_back(u);
      targets.push_back(v);
    }
  for (int v = A; v < S; ++v) {
    std::set<int> sel;
    while (static_cast<int>(sel.size()) < A) {
      int t = targets.empty()
                  ? static_cast<int>(rng.below(static_cast<uint64_t>(v)))
                  : targets[rng.below(targets.size())];
      sel.insert(t);
    }
    for (int t : sel) edges.emplace_back(t, v);
    for (int t : sel) {
      targets.push_back(t);
      targets.push_back(v);
    }
  }

  MilpInstance inst;
  inst.name = instance_name(spec, index);
  inst.num_vars = S;
  inst.num_int = S;
  inst.obj.assign(S, -1.0);
  inst.lower.assign(S, 0.0);
  inst.upper.assign(S, 1.0);
  for (auto [u, v] : edges) {
    inst.rows.push_back({{u, 1.0}, {v, 1.0}});
    inst.rhs.push_back(1.0);
  }
  return inst;
}

MilpInstance gen_facility(const TaskSpec& spec, uint64_t index) {
  require_valid(spec);
  const int N = spec.fc_customers, M = spec.fc_facilities;
  Rng rng = derive_rng(spec.seed, "gen.fc", index);

  std::vector<int> caps(M), dems(N), opens(M);
  std::vector<double> fx(M), fy(M), cx(N), cy(N);
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    long total_cap = 0, total_dem = 0;
    for (int j = 0; j < M; ++j) {
      caps[j] = rng.uniform_int(spec.fc_cap_lo, spec.fc_cap_hi);
      total_cap += caps[j];
    }
    for (int i = 0; i < N; ++i) {
      dems[i] = rng.uniform_int(spec.fc_dem_lo, spec.fc_dem_hi);
      total_dem += dems[i];
    }
    for (int j = 0; j < M; ++j) opens[j] = rng.uniform_int(100, 110);
    for (int j = 0; j < M; ++j) {
      fx[j] = rng.uniform();
      fy[j] = rng.uniform();
    }
    for (int i = 0; i < N; ++i) {
      cx[i] = rng.uniform();
      cy[i] = rng.uniform();
    }
    ok = total_cap >= total_dem;
  }
  if (!ok)
    throw std::runtime_error("facility generator: total capacity below demand after 100 attempts");

  MilpInstance inst;
  inst.name = instance_name(spec, index);
  const int n = M + N * M;
  inst.num_vars = n;
  inst.num_int = n;
  inst.obj.resize(n);
  inst.lower.assign(n, 0.0);
  inst.upper.assign(n, 1.0);
  auto xvar = [M](int i, int j) { return M + i * M + j; };
  for (int j = 0; j < M; ++j) inst.obj[j] = static_cast<double>(opens[j]);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j) {
      double d = std::hypot(cx[i] - fx[j], cy[i] - fy[j]);
      inst.obj[xvar(i, j)] = dems[i] * d;
    }
  // Each customer assigned exactly once: paired <= and negated >= rows.
  for (int i = 0; i < N; ++i) {
    std::vector<MilpInstance::Entry> le, ge;
    for (int j = 0; j < M; ++j) {
      le.push_back({xvar(i, j), 1.0});
      ge.push_back({xvar(i, j), -1.0});
    }
    inst.rows.push_back(std::move(le));
    inst.rhs.push_back(1.0);
    inst.rows.push_back(std::move(ge));
    inst.rhs.push_back(-1.0);
  }
  // Demand served by an open facility within its capacity.
  for (int j = 0; j < M; ++j) {
    std::vector<MilpInstance::Entry> row;
    row.push_back({j, -static_cast<double>(caps[j])});
    for (int i = 0; i < N; ++i) row.push_back({xvar(i, j), static_cast<double>(dems[i])});
    inst.rows.push_back(std::move(row));
    inst.rhs.push_back(0.0);
  }
  if (spec.fc_max_served > 0) {
    for (int j = 0; j < M; ++j) {
      std::vector<MilpInstance::Entry> row;
      for (int i = 0; i < N; ++i) row.push_back({xvar(i, j), 1.0});
      inst.rows.push_back(std::move(row));
      inst.rhs.push_back(static_cast<double>(spec.fc_max_served));
    }
  }
  return inst;
}

MilpInstance gen_instance(const TaskSpec& spec, uint64_t index) {
  switch (spec.family) {
    case Family::SetCover: return gen_set_cover(spec, index);
    case Family::IndepSet: return gen_indep_set(spec, index);
    case Family::FacilityLoc: return gen_facility(spec, index);
  }
  throw std::logic_error("gen_instance: bad family");
}

std::vector<TaskSpec> full_sequence(Family f) {
  std::vector<TaskSpec> out;
  switch (f) {
    case Family::SetCover:
      for (double p : {0.05, 0.075, 0.1, 0.125, 0.15, 0.2}) {
        TaskSpec t;
        t.family = Family::SetCover;
        t.sc_rows = 700;
        t.sc_cols = 800;
        t.sc_density = p;
        char buf[32];
        snprintf(buf, sizeof buf, "sc_p%g", p);
        t.name = buf;
        out.push_back(t);
      }
      break;
    case Family::IndepSet:
      for (auto [a, s] : std::vector<std::pair<int, int>>{
               {4, 750}, {4, 500}, {4, 450}, {5, 450}, {5, 400}, {5, 350}}) {
        TaskSpec t;
        t.family = Family::IndepSet;
        t.is_affinity = a;
        t.is_size = s;
        t.name = "is_a" + std::to_string(a) + "_s" + std::to_string(s);
        out.push_back(t);
      }
      break;
    case Family::FacilityLoc:
      for (auto [clo, chi, dlo, dhi, ms] : std::vector<std::array<int, 5>>{
               {40, 50, 5, 10, 0},
               {50, 55, 30, 35, 0},
               {80, 90, 60, 65, 0},
               {100, 110, 80, 90, 0},
               {100, 110, 80, 90, 95}}) {
        TaskSpec t;
        t.family = Family::FacilityLoc;
        t.fc_customers = 100;
        t.fc_facilities = 100;
        t.fc_cap_lo = clo;
        t.fc_cap_hi = chi;
        t.fc_dem_lo = dlo;
        t.fc_dem_hi = dhi;
        t.fc_max_served = ms;
        t.name = "fc_c" + std::to_string(clo) + "_" + std::to_string(chi) + "_d" +
                 std::to_string(dlo) + "_" + std::to_string(dhi) +
                 (ms > 0 ? "_ms" + std::to_string(ms) : "");
        out.push_back(t);
      }
      break;
  }
  return out;
}

std::vector<TaskSpec> desk_sequence(Family f) {
  std::vector<TaskSpec> out;
  switch (f) {
    case Family::SetCover:
      // Task 0 is larger and sparse so a trained policy has measurable headroom
      // over random; the dense follow-ups conflict with it instead of refining it.
      for (auto [r, c, p] : std::vector<std::tuple<int, int, double>>{
               {100, 150, 0.1}, {60, 80, 0.3}, {60, 80, 0.6}}) {
        TaskSpec t;
        t.family = Family::SetCover;
        t.sc_rows = r;
        t.sc_cols = c;
        t.sc_density = p;
        char buf[32];
        snprintf(buf, sizeof buf, "scd_p%g", p);
        t.name = buf;
        out.push_back(t);
      }
      break;
    case Family::IndepSet:
      for (auto [a, s] : std::vector<std::pair<int, int>>{{3, 60}, {3, 50}, {4, 40}}) {
        TaskSpec t;
        t.family = Family::IndepSet;
        t.is_affinity = a;
        t.is_size = s;
        t.name = "isd_a" + std::to_string(a) + "_s" + std::to_string(s);
        out.push_back(t);
      }
      break;
    case Family::FacilityLoc:
      for (auto [clo, chi, dlo, dhi, ms] : std::vector<std::array<int, 5>>{
               {40, 50, 5, 10, 0}, {30, 40, 10, 15, 0}, {30, 40, 15, 20, 12}}) {
        TaskSpec t;
        t.family = Family::FacilityLoc;
        t.fc_customers = 15;
        t.fc_facilities = 8;
        t.fc_cap_lo = clo;
        t.fc_cap_hi = chi;
        t.fc_dem_lo = dlo;
        t.fc_dem_hi = dhi;
        t.fc_max_served = ms;
        t.name = "fcd_c" + std::to_string(clo) + "_" + std::to_string(chi) + "_d" +
                 std::to_string(dlo) + "_" + std::to_string(dhi) +
                 (ms > 0 ? "_ms" + std::to_string(ms) : "");
        out.push_back(t);
      }
      break;
  }
  return out;
}

uint64_t content_hash(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string hash_hex(uint64_t h) {
  char buf[17];
  auto r = std::to_chars(buf, buf + 16, h, 16);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string spec_to_json(const TaskSpec& spec) {
  nlohmann::json j;
  j["family"] = family_name(spec.family);
  j["name"] = spec.name;
  j["count"] = spec.count;
  j["seed"] = spec.seed;
  switch (spec.family) {
    case Family::SetCover:
      j["sc_rows"] = spec.sc_rows;
      j["sc_cols"] = spec.sc_cols;
      j["sc_density"] = spec.sc_density;
      break;
    case Family::IndepSet:
      j["is_affinity"] = spec.is_affinity;
      j["is_size"] = spec.is_size;
      break;
    case Family::FacilityLoc:
      j["fc_customers"] = spec.fc_customers;
      j["fc_facilities"] = spec.fc_facilities;
      j["fc_cap_lo"] = spec.fc_cap_lo;
      j["fc_cap_hi"] = spec.fc_cap_hi;
      j["fc_dem_lo"] = spec.fc_dem_lo;
      j["fc_dem_hi"] = spec.fc_dem_hi;
      j["fc_max_served"] = spec.fc_max_served;
      break;
  }
  return j.dump(2);
}

TaskSpec spec_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TaskSpec spec;
  spec.family = family_from_string(j.at("family").get<std::string>());
  spec.name = j.at("name").get<std::string>();
  spec.count = j.at("count").get<int>();
  spec.seed = j.at("seed").get<uint64_t>();
  switch (spec.family) {
    case Family::SetCover:
      spec.sc_rows = j.at("sc_rows").get<int>();
      spec.sc_cols = j.at("sc_cols").get<int>();
      spec.sc_density = j.at("sc_density").get<double>();
      break;
    case Family::IndepSet:
      spec.is_affinity = j.at("is_affinity").get<int>();
      spec.is_size = j.at("is_size").get<int>();
      break;
    case Family::FacilityLoc:
      spec.fc_customers = j.at("fc_customers").get<int>();
      spec.fc_facilities = j.at("fc_facilities").get<int>();
      spec.fc_cap_lo = j.at("fc_cap_lo").get<int>();
      spec.fc_cap_hi = j.at("fc_cap_hi").get<int>();
      spec.fc_dem_lo = j.at("fc_dem_lo").get<int>();
      spec.fc_dem_hi = j.at("fc_dem_hi").get<int>();
      spec.fc_max_served = j.at("fc_max_served").get<int>();
      break;
  }
  std::string err = validate_spec(spec);
  if (!err.empty()) throw std::runtime_error("manifest spec invalid: " + err);
  return spec;
}

std::string gen_suite(const TaskSpec& spec, const std::string& out_dir) {
  require_valid(spec);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  nlohmann::json manifest = nlohmann::json::parse(spec_to_json(spec));
  manifest["format"] = "limip-suite";
  manifest["version"] = 1;
  nlohmann::json files = nlohmann::json::array();
  for (uint64_t k = 0; k < static_cast<uint64_t>(spec.count); ++k) {
    MilpInstance inst = gen_instance(spec, k);
    std::string text = instance_to_text(inst);
    std::string fname = inst.name + ".milp";
    std::ofstream f(fs::path(out_dir) / fname, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + fname);
    f << text;
    nlohmann::json entry;
    entry["file"] = fname;
    entry["hash"] = hash_hex(content_hash(text));
    files.push_back(entry);
  }
  manifest["files"] = files;
  std::string base = spec.name.empty() ? default_name(spec.family) : spec.name;
  fs::path mpath = fs::path(out_dir) / (base + ".manifest.json");
  std::ofstream mf(mpath, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write manifest");
  mf << manifest.dump(2) << "\n";
  return mpath.string();
}

}  // namespace limip
