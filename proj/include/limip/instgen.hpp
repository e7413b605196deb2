#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "limip/milp.hpp"
#include "limip/rng.hpp"

namespace limip {

enum class Family { SetCover, IndepSet, FacilityLoc };

std::string family_name(Family f);
Family family_from_string(const std::string& s);

// Parameters for one problem distribution. Only the fields of the selected
// family are read; the rest stay at their defaults.
struct TaskSpec {
  Family family = Family::SetCover;
  std::string name;
  int count = 1;
  uint64_t seed = 0;

  // Set cover: rows x cols membership matrix with density p.
  int sc_rows = 60;
  int sc_cols = 80;
  double sc_density = 0.1;

  // Independent set: preferential-attachment graph, each new node attaches
  // to `affinity` distinct nodes; `size` nodes total.
  int is_affinity = 4;
  int is_size = 60;

  // Facility location: capacities and demands sampled uniformly from
  // integer ranges; max_served 0 means the per-facility cap rows are absent.
  int fc_customers = 15;
  int fc_facilities = 8;
  int fc_cap_lo = 40, fc_cap_hi = 50;
  int fc_dem_lo = 5, fc_dem_hi = 10;
  int fc_max_served = 0;
};

// Empty string when valid, else the first problem found.
std::string validate_spec(const TaskSpec& spec);

// Pure functions of (spec, index): the same arguments always produce the
// same instance.
MilpInstance gen_set_cover(const TaskSpec& spec, uint64_t index);
MilpInstance gen_indep_set(const TaskSpec& spec, uint64_t index);
MilpInstance gen_facility(const TaskSpec& spec, uint64_t index);
MilpInstance gen_instance(const TaskSpec& spec, uint64_t index);

// Named task sequences. `full_sequence` is the full-scale drifting
// distribution set; `desk_sequence` is a small-footprint set for
// laptop-speed experiments.
std::vector<TaskSpec> full_sequence(Family f);
std::vector<TaskSpec> desk_sequence(Family f);

// Writes spec.count instances as <name>_<k>.milp plus manifest.json into
// out_dir. Rebuilding from the manifest is byte-identical; returns the
// manifest path.
std::string gen_suite(const TaskSpec& spec, const std::string& out_dir);

// Manifest round trip.
std::string spec_to_json(const TaskSpec& spec);
TaskSpec spec_from_json(const std::string& text);

// FNV-1a over the file bytes, used for manifest content checks.
uint64_t content_hash(const std::string& bytes);

}  // namespace limip
