#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "limip/milp.hpp"

namespace limip {
namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw std::runtime_error("milp parse error at line " + std::to_string(line) + ": " + msg);
}

// Shortest representation that round-trips; infinities as +/-1e20 sentinels.
void append_real(std::string& out, double v) {
  if (v >= kFileInf) {
    out += "1e+20";
    return;
  }
  if (v <= -kFileInf) {
    out += "-1e+20";
    return;
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_real(const std::string& tok, int line) {
  double v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    parse_fail(line, "bad real '" + tok + "'");
  if (v >= kFileInf) return kInf;
  if (v <= -kFileInf) return -kInf;
  return v;
}

long parse_int(const std::string& tok, int line) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    parse_fail(line, "bad integer '" + tok + "'");
  return v;
}

}  // namespace

std::string instance_to_text(const MilpInstance& inst) {
  auto errs = validate(inst);
  if (!errs.empty())
    throw std::invalid_argument("refusing to serialize invalid instance: " + errs.front());
  if (inst.name.empty() || inst.name.find_first_of(" \t\n") != std::string::npos)
    throw std::invalid_argument("instance name must be nonempty and whitespace-free");

  std::string out;
  out += "milp " + inst.name + " " + std::to_string(inst.num_vars) + " " +
         std::to_string(inst.num_int) + " " + std::to_string(inst.num_rows()) + "\n";
  out += "obj";
  for (double c : inst.obj) {
    out += ' ';
    append_real(out, c);
  }
  out += "\nbounds\n";
  for (int j = 0; j < inst.num_vars; ++j) {
    append_real(out, inst.lower[j]);
    out += ' ';
    append_real(out, inst.upper[j]);
    out += '\n';
  }
  for (int i = 0; i < inst.num_rows(); ++i) {
    out += "row ";
    append_real(out, inst.rhs[i]);
    out += ' ';
    out += std::to_string(inst.rows[i].size());
    for (const auto& e : inst.rows[i]) {
      out += ' ';
      out += std::to_string(e.col);
      out += ':';
      append_real(out, e.coef);
    }
    out += '\n';
  }
  return out;
}

MilpInstance instance_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty()) return true;
    }
    return false;
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream ls(s);
    std::string t;
    while (ls >> t) toks.push_back(t);
    return toks;
  };

  if (!next_line()) parse_fail(0, "empty input");
  auto hdr = split(line);
  if (hdr.size() != 5 || hdr[0] != "milp") parse_fail(lineno, "expected 'milp <name> <n> <p> <m>'");
  MilpInstance inst;
  inst.name = hdr[1];
  inst.num_vars = static_cast<int>(parse_int(hdr[2], lineno));
  inst.num_int = static_cast<int>(parse_int(hdr[3], lineno));
  long m = parse_int(hdr[4], lineno);
  if (inst.num_vars < 0 || m < 0) parse_fail(lineno, "negative dimensions");

  if (!next_line()) parse_fail(lineno, "missing obj section");
  auto toks = split(line);
  if (toks.empty() || toks[0] != "obj") parse_fail(lineno, "expected obj section");
  if (static_cast<int>(toks.size()) != inst.num_vars + 1)
    parse_fail(lineno, "obj expects " + std::to_string(inst.num_vars) + " coefficients");
  for (int j = 0; j < inst.num_vars; ++j) inst.obj.push_back(parse_real(toks[j + 1], lineno));

  if (!next_line() || line != "bounds") parse_fail(lineno, "expected bounds section");
  for (int j = 0; j < inst.num_vars; ++j) {
    if (!next_line()) parse_fail(lineno, "truncated bounds section");
    auto bt = split(line);
    if (bt.size() != 2) parse_fail(lineno, "bound line expects 'lower upper'");
    inst.lower.push_back(parse_real(bt[0], lineno));
    inst.upper.push_back(parse_real(bt[1], lineno));
  }

  for (long i = 0; i < m; ++i) {
    if (!next_line()) parse_fail(lineno, "truncated rows: expected " + std::to_string(m));
    auto rt = split(line);
    if (rt.size() < 3 || rt[0] != "row") parse_fail(lineno, "expected 'row <rhs> <nnz> ...'");
    inst.rhs.push_back(parse_real(rt[1], lineno));
    long nnz = parse_int(rt[2], lineno);
    if (nnz < 0 || static_cast<long>(rt.size()) != nnz + 3)
      parse_fail(lineno, "row expects " + std::to_string(nnz) + " entries");
    std::vector<MilpInstance::Entry> row;
    for (long k = 0; k < nnz; ++k) {
      const std::string& tok = rt[3 + k];
      auto colon = tok.find(':');
      if (colon == std::string::npos) parse_fail(lineno, "entry '" + tok + "' missing ':'");
      MilpInstance::Entry e;
      e.col = static_cast<int>(parse_int(tok.substr(0, colon), lineno));
      e.coef = parse_real(tok.substr(colon + 1), lineno);
      row.push_back(e);
    }
    inst.rows.push_back(std::move(row));
  }
  if (next_line()) parse_fail(lineno, "trailing content after last row");

  auto errs = validate(inst);
  if (!errs.empty()) parse_fail(lineno, "invalid instance: " + errs.front());
  return inst;
}

MilpInstance read_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return instance_from_text(ss.str());
}

void write_instance(const MilpInstance& inst, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << instance_to_text(inst);
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace limip
