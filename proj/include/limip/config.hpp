#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace limip {

// One parsed value from the key/value config format: string, number,
// boolean, or a flat list of these.
struct ConfigValue {
  enum class Kind { Str, Num, Bool, List };
  Kind kind = Kind::Str;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<ConfigValue> list;
};

using ConfigSection = std::map<std::string, ConfigValue>;
using ConfigTable = std::map<std::string, ConfigSection>;

// Parses the key = value format with [section] headers, # comments,
// quoted strings, numbers, booleans, and single-line [a, b] lists.
// Throws std::runtime_error with a line number on malformed input.
ConfigTable parse_config_text(const std::string& text);
ConfigTable load_config(const std::string& path);

// Null when the section or key is absent.
const ConfigValue* config_find(const ConfigTable& t, const std::string& section,
                               const std::string& key);

// Typed getters with defaults; the _req variants throw when absent. All
// throw on a type mismatch, naming section and key.
double cfg_num(const ConfigTable& t, const std::string& sec, const std::string& key, double dflt);
int64_t cfg_int(const ConfigTable& t, const std::string& sec, const std::string& key,
                int64_t dflt);
bool cfg_bool(const ConfigTable& t, const std::string& sec, const std::string& key, bool dflt);
std::string cfg_str(const ConfigTable& t, const std::string& sec, const std::string& key,
                    const std::string& dflt);
std::string cfg_str_req(const ConfigTable& t, const std::string& sec, const std::string& key);

}  // namespace limip
