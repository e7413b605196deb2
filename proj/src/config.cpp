#include "limip/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace limip {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::runtime_error("config line " + std::to_string(line) + ": " + msg);
}

void skip_ws(const std::string& s, size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

bool key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

ConfigValue parse_scalar(const std::string& s, size_t& i, int line);

ConfigValue parse_value(const std::string& s, size_t& i, int line) {
  skip_ws(s, i);
  if (i >= s.size()) fail(line, "missing value");
  if (s[i] == '[') {
    ++i;
    ConfigValue v;
    v.kind = ConfigValue::Kind::List;
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
      ++i;
      return v;
    }
    while (true) {
      v.list.push_back(parse_scalar(s, i, line));
      skip_ws(s, i);
      if (i < s.size() && s[i] == ',') {
        ++i;
        skip_ws(s, i);
        continue;
      }
      if (i < s.size() && s[i] == ']') {
        ++i;
        return v;
      }
      fail(line, "expected ',' or ']' in list");
    }
  }
  return parse_scalar(s, i, line);
}

ConfigValue parse_scalar(const std::string& s, size_t& i, int line) {
  skip_ws(s, i);
  if (i >= s.size()) fail(line, "missing value");
  ConfigValue v;
  if (s[i] == '"') {
    ++i;
    v.kind = ConfigValue::Kind::Str;
    while (i < s.size() && s[i] != '"') {
      char c = s[i++];
      if (c == '\\') {
        if (i >= s.size()) fail(line, "dangling escape in string");
        char e = s[i++];
        switch (e) {
          case '"': v.str += '"'; break;
          case '\\': v.str += '\\'; break;
          case 'n': v.str += '\n'; break;
          case 't': v.str += '\t'; break;
          default: fail(line, std::string("unknown escape \\") + e);
        }
      } else {
        v.str += c;
      }
    }
    if (i >= s.size()) fail(line, "unterminated string");
    ++i;
    return v;
  }
  size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' && s[i] != ' ' && s[i] != '\t')
    ++i;
  std::string tok = s.substr(start, i - start);
  if (tok.empty()) fail(line, "missing value");
  if (tok == "true" || tok == "false") {
    v.kind = ConfigValue::Kind::Bool;
    v.flag = tok == "true";
    return v;
  }
  char* end = nullptr;
  double num = std::strtod(tok.c_str(), &end);
  if (end && *end == '\0' && std::isfinite(num)) {
    v.kind = ConfigValue::Kind::Num;
    v.num = num;
    return v;
  }
  fail(line, "cannot parse value '" + tok + "' (strings need quotes)");
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
  ConfigTable table;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    size_t i = 0;
    skip_ws(raw, i);
    if (i >= raw.size() || raw[i] == '#') continue;
    if (raw[i] == '[') {
      ++i;
      size_t start = i;
      while (i < raw.size() && raw[i] != ']') ++i;
      if (i >= raw.size()) fail(line, "unterminated section header");
      section = raw.substr(start, i - start);
      if (section.empty()) fail(line, "empty section name");
      for (char c : section)
        if (!key_char(c)) fail(line, "bad section name '" + section + "'");
      ++i;
      skip_ws(raw, i);
      if (i < raw.size() && raw[i] != '#') fail(line, "trailing content after section header");
      table[section];
      continue;
    }
    size_t kstart = i;
    while (i < raw.size() && key_char(raw[i])) ++i;
    std::string key = raw.substr(kstart, i - kstart);
    if (key.empty()) fail(line, "expected key");
    skip_ws(raw, i);
    if (i >= raw.size() || raw[i] != '=') fail(line, "expected '=' after key '" + key + "'");
    ++i;
    ConfigValue v = parse_value(raw, i, line);
    skip_ws(raw, i);
    if (i < raw.size() && raw[i] != '#') fail(line, "trailing content after value for '" + key + "'");
    if (table[section].count(key)) fail(line, "duplicate key '" + key + "'");
    table[section][key] = std::move(v);
  }
  return table;
}

ConfigTable load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

const ConfigValue* config_find(const ConfigTable& t, const std::string& section,
                               const std::string& key) {
  auto s = t.find(section);
  if (s == t.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

namespace {

[[noreturn]] void type_fail(const std::string& sec, const std::string& key, const char* want) {
  throw std::runtime_error("config [" + sec + "] " + key + ": expected " + want);
}

}  // namespace

double cfg_num(const ConfigTable& t, const std::string& sec, const std::string& key, double dflt) {
  const ConfigValue* v = config_find(t, sec, key);
  if (!v) return dflt;
  if (v->kind != ConfigValue::Kind::Num) type_fail(sec, key, "a number");
  return v->num;
}

int64_t cfg_int(const ConfigTable& t, const std::string& sec, const std::string& key,
                int64_t dflt) {
  const ConfigValue* v = config_find(t, sec, key);
  if (!v) return dflt;
  if (v->kind != ConfigValue::Kind::Num) type_fail(sec, key, "an integer");
  double r = std::round(v->num);
  if (std::abs(v->num - r) > 1e-9) type_fail(sec, key, "an integer");
  return static_cast<int64_t>(r);
}

bool cfg_bool(const ConfigTable& t, const std::string& sec, const std::string& key, bool dflt) {
  const ConfigValue* v = config_find(t, sec, key);
  if (!v) return dflt;
  if (v->kind != ConfigValue::Kind::Bool) type_fail(sec, key, "true or false");
  return v->flag;
}

std::string cfg_str(const ConfigTable& t, const std::string& sec, const std::string& key,
                    const std::string& dflt) {
  const ConfigValue* v = config_find(t, sec, key);
  if (!v) return dflt;
  if (v->kind != ConfigValue::Kind::Str) type_fail(sec, key, "a string");
  return v->str;
}

std::string cfg_str_req(const ConfigTable& t, const std::string& sec, const std::string& key) {
  const ConfigValue* v = config_find(t, sec, key);
  if (!v) throw std::runtime_error("config [" + sec + "] missing required key '" + key + "'");
  if (v->kind != ConfigValue::Kind::Str) type_fail(sec, key, "a string");
  return v->str;
}

}  // namespace limip
