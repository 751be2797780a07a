#include "fewbit/solver.hpp"

#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace fewbit {

namespace {

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

double parse_number(std::string_view token, const char* where) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw FormatError(std::string("unparseable number '") + std::string(token) + "' in " + where);
  }
  return value;
}

bool is_number_token(std::string_view t) {
  if (t.empty()) return false;
  std::size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
  return i < t.size() && (std::isdigit(static_cast<unsigned char>(t[i])) || t[i] == '.');
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::FeasibleLimit: return "feasible-limit";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NoIncumbent: return "no-incumbent";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

// ---------------------------------------------------------------------------
// LP text format
// ---------------------------------------------------------------------------

std::string write_lp(const MilpModel& model) {
  for (const auto& v : model.variables()) {
    if (v.name.empty() || is_number_token(v.name)) {
      throw std::invalid_argument("variable name unusable in LP format: '" + v.name + "'");
    }
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
      throw std::invalid_argument("LP writer requires finite bounds");
    }
  }

  std::string out;
  out.reserve(1 << 16);
  out += "\\ fewbit model\n";
  out += model.objective_sense() == ObjSense::Maximize ? "Maximize\n" : "Minimize\n";

  auto append_terms = [&](const std::vector<LinTerm>& terms, std::string& line) {
    for (const auto& term : terms) {
      const double coef = term.coef;
      line += coef < 0 ? " - " : " + ";
      line += format_number(std::abs(coef));
      line += ' ';
      line += model.variable(term.var).name;
      if (line.size() > 200) {
        out += line;
        out += '\n';
        line = " ";
      }
    }
  };

  std::string line = " obj:";
  append_terms(model.objective(), line);
  out += line;
  out += '\n';

  out += "Subject To\n";
  for (const auto& row : model.rows()) {
    line = " " + row.name + ":";
    append_terms(row.terms, line);
    switch (row.sense) {
      case RowSense::LessEqual: line += " <= "; break;
      case RowSense::GreaterEqual: line += " >= "; break;
      case RowSense::Equal: line += " = "; break;
    }
    line += format_number(row.rhs);
    out += line;
    out += '\n';
  }

  out += "Bounds\n";
  for (const auto& v : model.variables()) {
    if (v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0) continue;
    out += " " + format_number(v.lower) + " <= " + v.name + " <= " + format_number(v.upper) +
           "\n";
  }

  bool header_done = false;
  for (const auto& v : model.variables()) {
    if (v.kind != VarKind::Integer) continue;
    if (!header_done) { out += "General\n"; header_done = true; }
    out += " " + v.name + "\n";
  }
  header_done = false;
  for (const auto& v : model.variables()) {
    if (v.kind != VarKind::Binary) continue;
    if (!header_done) { out += "Binary\n"; header_done = true; }
    out += " " + v.name + "\n";
  }
  out += "End\n";
  return out;
}

namespace {

std::vector<std::string> tokenize_lp(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '\\') {  // comment to end of line
      while (pos < text.size() && text[pos] != '\n') ++pos;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) { ++pos; continue; }
    if (c == ':') { tokens.emplace_back(":"); ++pos; continue; }
    if (c == '<' || c == '>' || c == '=') {
      std::string t(1, c);
      if (pos + 1 < text.size() && text[pos + 1] == '=') { t += '='; ++pos; }
      ++pos;
      tokens.push_back(t == "<" ? "<=" : t == ">" ? ">=" : t);
      continue;
    }
    if ((c == '+' || c == '-') &&
        !(pos + 1 < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos + 1])) ||
                                    text[pos + 1] == '.'))) {
      tokens.emplace_back(1, c);
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end])) &&
           text[end] != ':' && text[end] != '<' && text[end] != '>' && text[end] != '=') {
      ++end;
    }
    tokens.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

bool is_section_keyword(const std::string& low) {
  return low == "maximize" || low == "minimize" || low == "max" || low == "min" ||
         low == "subject" || low == "st" || low == "s.t." || low == "bounds" ||
         low == "general" || low == "gen" || low == "binary" || low == "bin" || low == "end";
}

bool is_sense_token(const std::string& t) { return t == "<=" || t == ">=" || t == "="; }

struct PendingVar {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  bool explicit_bounds = false;
  VarKind kind = VarKind::Continuous;
  int order = -1;
};

}  // namespace

MilpModel parse_lp(const std::string& text) {
  const auto tokens = tokenize_lp(text);
  std::size_t i = 0;
  auto peek_low = [&]() { return i < tokens.size() ? lower(tokens[i]) : std::string("end"); };
  auto need = [&](const char* what) -> const std::string& {
    if (i >= tokens.size()) throw FormatError(std::string("unexpected end of LP: wanted ") + what);
    return tokens[i];
  };

  std::map<std::string, PendingVar> vars;
  int order_counter = 0;
  auto touch = [&](const std::string& name) -> PendingVar& {
    auto [it, inserted] = vars.try_emplace(name);
    if (inserted) it->second.order = order_counter++;
    return it->second;
  };

  struct RawTerm { std::string var; double coef; };
  auto parse_sum = [&](std::vector<RawTerm>& terms) {
    double sign = 1.0;
    bool have_sign = false;
    std::optional<double> coef;
    while (i < tokens.size()) {
      const std::string& t = tokens[i];
      if (t == "+" || t == "-") {
        if (have_sign || coef) throw FormatError("dangling sign in LP expression");
        sign = t == "-" ? -1.0 : 1.0;
        have_sign = true;
        ++i;
        continue;
      }
      if (is_sense_token(t)) break;
      if (is_number_token(t)) {
        if (coef) throw FormatError("two consecutive numbers in LP expression");
        coef = parse_number(t, "LP expression");
        ++i;
        continue;
      }
      if (!have_sign && !coef && is_section_keyword(lower(t))) break;
      touch(t);
      terms.push_back({t, sign * coef.value_or(1.0)});
      sign = 1.0;
      have_sign = false;
      coef.reset();
      ++i;
    }
    if (have_sign || coef) throw FormatError("trailing sign or number in LP expression");
  };

  // objective
  std::string low = peek_low();
  if (!(low == "maximize" || low == "minimize" || low == "max" || low == "min")) {
    throw FormatError("LP must start with Maximize or Minimize");
  }
  const ObjSense obj_sense =
      (low == "maximize" || low == "max") ? ObjSense::Maximize : ObjSense::Minimize;
  ++i;
  std::vector<RawTerm> obj_terms;
  if (i + 1 < tokens.size() && tokens[i + 1] == ":") i += 2;  // objective label
  parse_sum(obj_terms);

  if (peek_low() != "subject" && peek_low() != "st" && peek_low() != "s.t.") {
    throw FormatError("expected Subject To after the objective");
  }
  ++i;
  if (peek_low() == "to") ++i;

  struct RawRow { std::string name; std::vector<RawTerm> terms; RowSense sense; double rhs; };
  std::vector<RawRow> rows;
  int unnamed = 0;
  while (i < tokens.size() && !is_section_keyword(peek_low())) {
    RawRow row;
    if (i + 1 < tokens.size() && tokens[i + 1] == ":") {
      row.name = tokens[i];
      i += 2;
    } else {
      row.name = "r" + std::to_string(unnamed++);
    }
    parse_sum(row.terms);
    const std::string& sense = need("constraint sense");
    if (!is_sense_token(sense)) throw FormatError("expected <=, >= or = in constraint");
    row.sense = sense == "<=" ? RowSense::LessEqual
                              : sense == ">=" ? RowSense::GreaterEqual : RowSense::Equal;
    ++i;
    row.rhs = parse_number(need("constraint rhs"), "constraint rhs");
    ++i;
    rows.push_back(std::move(row));
  }

  while (i < tokens.size()) {
    low = peek_low();
    if (low == "end") break;
    if (low == "bounds") {
      ++i;
      while (i < tokens.size() && !is_section_keyword(peek_low())) {
        if (is_number_token(tokens[i])) {  // lo <= name [<= hi]
          const double lo = parse_number(tokens[i], "bound");
          ++i;
          if (need("<=") != "<=") throw FormatError("malformed bound line");
          ++i;
          PendingVar& v = touch(need("bounded variable"));
          ++i;
          v.lower = lo;
          v.explicit_bounds = true;
          if (i < tokens.size() && tokens[i] == "<=") {
            ++i;
            v.upper = parse_number(need("upper bound"), "bound");
            ++i;
          }
        } else {  // name <= hi | name >= lo | name = fix | name free
          PendingVar& v = touch(tokens[i]);
          ++i;
          const std::string& op = need("bound operator");
          if (lower(op) == "free") {
            v.lower = -std::numeric_limits<double>::infinity();
            v.explicit_bounds = true;
            ++i;
          } else if (op == "<=") {
            ++i;
            v.upper = parse_number(need("upper bound"), "bound");
            v.explicit_bounds = true;
            ++i;
          } else if (op == ">=") {
            ++i;
            v.lower = parse_number(need("lower bound"), "bound");
            v.explicit_bounds = true;
            ++i;
          } else if (op == "=") {
            ++i;
            v.lower = v.upper = parse_number(need("fixed bound"), "bound");
            v.explicit_bounds = true;
            ++i;
          } else {
            throw FormatError("malformed bound line near '" + op + "'");
          }
        }
      }
      continue;
    }
    if (low == "general" || low == "gen" || low == "binary" || low == "bin") {
      const bool binary = low == "binary" || low == "bin";
      ++i;
      while (i < tokens.size() && !is_section_keyword(peek_low())) {
        PendingVar& v = touch(tokens[i]);
        v.kind = binary ? VarKind::Binary : VarKind::Integer;
        ++i;
      }
      continue;
    }
    throw FormatError("unexpected token '" + tokens[i] + "' in LP");
  }

  MilpModel model;
  std::vector<const std::pair<const std::string, PendingVar>*> ordered(vars.size());
  for (const auto& entry : vars) ordered[entry.second.order] = &entry;
  for (const auto* entry : ordered) {
    const auto& [name, pv] = *entry;
    Variable v;
    v.name = name;
    std::tie(v.role, v.index) = parse_var_name(name);
    v.kind = pv.kind;
    if (pv.explicit_bounds) {
      v.lower = pv.lower;
      v.upper = pv.upper;
    } else if (pv.kind == VarKind::Binary) {
      v.lower = 0.0;
      v.upper = 1.0;
    } else {
      v.lower = 0.0;
      v.upper = std::numeric_limits<double>::infinity();
    }
    model.add_variable(std::move(v));
  }
  auto resolve = [&](const std::vector<RawTerm>& raw) {
    std::vector<LinTerm> terms;
    terms.reserve(raw.size());
    for (const auto& rt : raw) terms.push_back({model.find_variable(rt.var), rt.coef});
    return terms;
  };
  for (const auto& row : rows) {
    model.add_row({row.name, resolve(row.terms), row.sense, row.rhs});
  }
  model.set_objective(obj_sense, resolve(obj_terms));
  return model;
}

// ---------------------------------------------------------------------------
// Start values and solution documents
// ---------------------------------------------------------------------------

std::string write_start_values(const MilpModel& model) {
  std::string out;
  for (const auto& [var, value] : model.warm_values()) {
    out += model.variable(var).name;
    out += ' ';
    out += format_number(value);
    out += '\n';
  }
  return out;
}

ParsedSolution parse_solution(const std::string& text) {
  ParsedSolution sol;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    std::size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    std::istringstream fields(line.substr(start));
    std::string key, value;
    if (!(fields >> key >> value)) {
      throw FormatError("malformed solution line: '" + line + "'");
    }
    std::string extra;
    if (fields >> extra) throw FormatError("trailing token in solution line: '" + line + "'");
    if (key.starts_with("=")) {
      if (key == "=status") sol.status = value;
      else if (key == "=objective") sol.objective = parse_number(value, "solution objective");
      else if (key == "=gap") sol.mip_gap = parse_number(value, "solution gap");
      // unknown metadata keys are ignored
      continue;
    }
    sol.values[key] = parse_number(value, "solution value");
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Backend invocation
// ---------------------------------------------------------------------------

namespace {

// Driver around scipy.optimize.milp (HiGHS). Reads the LP subset emitted by
// write_lp, honors the time limit, writes `=status/=objective/=gap` metadata
// followed by one `name value` pair per variable. A start-values path may be
// passed as a fourth argument; this backend cannot inject MIP starts, so it
// is accepted and ignored (the gateway holds the warm-start guarantee).
constexpr const char* kScipyDriver = R"PY(
import re
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

SECTIONS = {"maximize", "minimize", "max", "min", "subject", "st", "s.t.",
            "bounds", "general", "gen", "binary", "bin", "end"}
SENSES = {"<=", ">=", "="}

TOKEN_RE = re.compile(
    r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|<=|>=|[<>=:]|[+-]|[^\s<>=:+-]+")


def tokenize(text):
    tokens = []
    for raw in text.splitlines():
        cut = raw.find("\\")
        if cut >= 0:
            raw = raw[:cut]
        for tok in TOKEN_RE.findall(raw):
            if tok == "<":
                tok = "<="
            elif tok == ">":
                tok = ">="
            tokens.append(tok)
    return tokens


def is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


class Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0
        self.vars = {}
        self.order = []

    def peek(self):
        return self.toks[self.i].lower() if self.i < len(self.toks) else "end"

    def touch(self, name):
        if name not in self.vars:
            self.vars[name] = {"lo": None, "hi": None, "kind": "c"}
            self.order.append(name)

    def parse_sum(self):
        terms = []
        sign, coef = 1.0, None
        while self.i < len(self.toks):
            t = self.toks[self.i]
            if t in ("+", "-"):
                sign = -1.0 if t == "-" else 1.0
                self.i += 1
                continue
            if t in SENSES:
                break
            if is_number(t):
                coef = float(t)
                self.i += 1
                continue
            if coef is None and self.peek() in SECTIONS:
                break
            self.touch(t)
            terms.append((t, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
            self.i += 1
        return terms


def parse_lp(text):
    p = Parser(tokenize(text))
    sense = p.peek()
    if sense not in ("maximize", "minimize", "max", "min"):
        raise ValueError("bad objective sense")
    maximize = sense in ("maximize", "max")
    p.i += 1
    if p.i + 1 < len(p.toks) and p.toks[p.i + 1] == ":":
        p.i += 2
    objective = p.parse_sum()
    if p.peek() in ("subject", "st", "s.t."):
        p.i += 1
        if p.peek() == "to":
            p.i += 1
    rows = []
    while p.i < len(p.toks) and p.peek() not in SECTIONS:
        if p.i + 1 < len(p.toks) and p.toks[p.i + 1] == ":":
            p.i += 2
        terms = p.parse_sum()
        op = p.toks[p.i]
        p.i += 1
        rhs = float(p.toks[p.i])
        p.i += 1
        rows.append((terms, op, rhs))
    while p.i < len(p.toks):
        section = p.peek()
        if section == "end":
            break
        p.i += 1
        if section == "bounds":
            while p.i < len(p.toks) and p.peek() not in SECTIONS:
                if is_number(p.toks[p.i]):
                    lo = float(p.toks[p.i])
                    p.i += 2  # skip <=
                    name = p.toks[p.i]
                    p.touch(name)
                    p.vars[name]["lo"] = lo
                    p.i += 1
                    if p.i < len(p.toks) and p.toks[p.i] == "<=":
                        p.i += 1
                        p.vars[name]["hi"] = float(p.toks[p.i])
                        p.i += 1
                else:
                    name = p.toks[p.i]
                    p.touch(name)
                    p.i += 1
                    op = p.toks[p.i]
                    p.i += 1
                    if op.lower() == "free":
                        p.vars[name]["lo"] = -np.inf
                    elif op == "<=":
                        p.vars[name]["hi"] = float(p.toks[p.i]); p.i += 1
                    elif op == ">=":
                        p.vars[name]["lo"] = float(p.toks[p.i]); p.i += 1
                    elif op == "=":
                        val = float(p.toks[p.i]); p.i += 1
                        p.vars[name]["lo"] = p.vars[name]["hi"] = val
        elif section in ("general", "gen", "binary", "bin"):
            kind = "b" if section in ("binary", "bin") else "i"
            while p.i < len(p.toks) and p.peek() not in SECTIONS:
                name = p.toks[p.i]
                p.touch(name)
                p.vars[name]["kind"] = kind
                p.i += 1
        else:
            raise ValueError("unexpected section %r" % section)
    return maximize, objective, rows, p.vars, p.order


def main():
    model_path, time_limit, solution_path = sys.argv[1], float(sys.argv[2]), sys.argv[3]
    with open(model_path) as fh:
        maximize, objective, rows, var_info, order = parse_lp(fh.read())

    index = {name: i for i, name in enumerate(order)}
    n = len(order)
    c = np.zeros(n)
    for name, coef in objective:
        c[index[name]] += coef
    if maximize:
        c = -c

    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    integrality = np.zeros(n)
    for name, info in var_info.items():
        i = index[name]
        if info["kind"] == "b":
            lo[i], hi[i] = 0.0, 1.0
            integrality[i] = 1
        elif info["kind"] == "i":
            integrality[i] = 1
        if info["lo"] is not None:
            lo[i] = info["lo"]
        if info["hi"] is not None:
            hi[i] = info["hi"]

    data, ri, ci, c_lo, c_hi = [], [], [], [], []
    for r, (terms, op, rhs) in enumerate(rows):
        for name, coef in terms:
            data.append(coef)
            ri.append(r)
            ci.append(index[name])
        if op == "<=":
            c_lo.append(-np.inf)
            c_hi.append(rhs)
        elif op == ">=":
            c_lo.append(rhs)
            c_hi.append(np.inf)
        else:
            c_lo.append(rhs)
            c_hi.append(rhs)

    kwargs = {
        "c": c,
        "integrality": integrality,
        "bounds": Bounds(lo, hi),
        "options": {"time_limit": time_limit, "presolve": True},
    }
    if rows:
        a = sparse.csc_array((data, (ri, ci)), shape=(len(rows), n))
        kwargs["constraints"] = LinearConstraint(a, np.array(c_lo), np.array(c_hi))
    res = milp(**kwargs)

    with open(solution_path, "w") as out:
        if res.status == 0:
            status = "optimal"
        elif res.status == 1:
            status = "feasible" if res.x is not None else "no-incumbent"
        elif res.status == 2:
            status = "infeasible"
        elif res.status == 3:
            status = "unbounded"
        else:
            status = "error"
        out.write("=status %s\n" % status)
        if res.x is not None:
            fun = res.fun if res.fun is not None else float(c @ res.x)
            out.write("=objective %.17g\n" % (-fun if maximize else fun))
            gap = getattr(res, "mip_gap", None)
            if gap is not None and np.isfinite(gap):
                out.write("=gap %.17g\n" % abs(gap))
            for name in order:
                out.write("%s %.17g\n" % (name, res.x[index[name]]))


if __name__ == "__main__":
    main()
)PY";

std::filesystem::path materialize_scipy_driver() {
  namespace fs = std::filesystem;
  // content-hashed name so edited driver text never collides with a stale copy
  std::uint64_t hash = 1469598103934665603ull;
  for (const char* c = kScipyDriver; *c; ++c) {
    hash = (hash ^ static_cast<unsigned char>(*c)) * 1099511628211ull;
  }
  char suffix[20];
  std::snprintf(suffix, sizeof(suffix), "%016llx", static_cast<unsigned long long>(hash));
  const fs::path target =
      fs::temp_directory_path() / ("fewbit_scipy_milp_" + std::string(suffix) + ".py");
  std::error_code ec;
  if (fs::exists(target, ec)) return target;
  const fs::path staging =
      fs::temp_directory_path() / ("fewbit_scipy_milp." + std::to_string(::getpid()) + ".tmp");
  {
    std::ofstream out(staging);
    out << kScipyDriver;
  }
  fs::rename(staging, target, ec);
  if (ec) {
    // lost the race against another process; the winner's copy is identical
    fs::remove(staging, ec);
  }
  return target;
}

std::vector<std::string> split_command(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string part;
  while (in >> part) parts.push_back(part);
  return parts;
}

std::string shell_quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  out += "'";
  return out;
}

std::string substitute(const std::string& templ, const std::string& key,
                       const std::string& value) {
  std::string out = templ;
  const std::string token = "{" + key + "}";
  for (std::size_t pos = out.find(token); pos != std::string::npos; pos = out.find(token)) {
    out.replace(pos, token.size(), value);
  }
  return out;
}

std::filesystem::path make_scratch_dir() {
  std::string pattern =
      (std::filesystem::temp_directory_path() / "fewbit-solve-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw std::runtime_error(std::string("mkdtemp failed: ") + std::strerror(errno));
  }
  return std::filesystem::path(pattern);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

BackendProfile default_backend() {
  if (const char* custom = std::getenv("FEWBIT_BACKEND_CMD"); custom && *custom) {
    return BackendProfile{"custom", split_command(custom), false};
  }
  const char* python = std::getenv("FEWBIT_PYTHON");
  BackendProfile profile;
  profile.name = "scipy";
  profile.command = {python && *python ? python : "python3",
                     materialize_scipy_driver().string(),
                     "{model_path}", "{time_limit}", "{solution_path}", "{start_path}"};
  return profile;
}

SolveResult solve(const SolveRequest& request) {
  if (request.model == nullptr) throw std::invalid_argument("solve needs a model");
  if (!(request.time_limit_s > 0)) throw std::invalid_argument("time limit must be positive");
  const MilpModel& model = *request.model;
  model.validate();
  const bool maximize = model.objective_sense() == ObjSense::Maximize;

  // A warm point usable as a fallback incumbent must cover every variable
  // and re-verify feasible.
  std::vector<double> warm_point;
  bool warm_valid = false;
  if (model.warm_values().size() == static_cast<std::size_t>(model.variable_count())) {
    warm_point.resize(model.variable_count());
    for (const auto& [var, value] : model.warm_values()) warm_point[var] = value;
    warm_valid = check_feasibility(model, warm_point).ok(1e-6);
  }

  const auto scratch = make_scratch_dir();
  const auto model_path = scratch / "model.lp";
  const auto start_path = scratch / "model.start";
  const auto solution_path = scratch / "solution.txt";
  const auto log_path = scratch / "backend.log";
  {
    std::ofstream out(model_path);
    out << write_lp(model);
  }
  {
    std::ofstream out(start_path);
    out << write_start_values(model);
  }

  std::string command;
  for (const auto& part : request.backend.command) {
    std::string arg = substitute(part, "model_path", model_path.string());
    arg = substitute(arg, "time_limit", format_number(request.time_limit_s));
    arg = substitute(arg, "solution_path", solution_path.string());
    arg = substitute(arg, "start_path", start_path.string());
    if (!command.empty()) command += ' ';
    command += shell_quote(arg);
  }
  command += " > " + shell_quote(log_path.string()) + " 2>&1";

  const auto t0 = std::chrono::steady_clock::now();
  const int rc = std::system(command.c_str());
  SolveResult result;
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string backend_status = "error";
  std::optional<double> backend_gap;
  std::vector<double> incumbent;
  std::string note;
  if (rc != 0) {
    note = "backend exited with code " + std::to_string(rc);
    const std::string log = read_file(log_path);
    if (!log.empty()) note += ": " + log.substr(0, 400);
  } else {
    try {
      const ParsedSolution sol = parse_solution(read_file(solution_path));
      backend_status = sol.status;
      backend_gap = sol.mip_gap;
      if (!sol.values.empty()) {
        incumbent.assign(model.variable_count(), 0.0);
        std::vector<char> seen(model.variable_count(), 0);
        for (const auto& [name, value] : sol.values) {
          const int var = model.find_variable(name);
          if (var < 0) throw FormatError("solution names unknown variable '" + name + "'");
          incumbent[var] = value;
          seen[var] = 1;
        }
        if (!request.backend.missing_value_is_zero) {
          for (int v = 0; v < model.variable_count(); ++v) {
            if (!seen[v]) {
              throw FormatError("solution missing variable '" + model.variable(v).name + "'");
            }
          }
        }
        if (round_integer_values(model, incumbent) > 1e-5) {
          note = "backend incumbent rejected: integrality off by more than 1e-5";
          incumbent.clear();
        } else if (const auto audit = check_feasibility(model, incumbent); !audit.ok(1e-6)) {
          note = "backend incumbent rejected: violates '" + audit.worst + "' by " +
                 format_number(audit.max_violation);
          incumbent.clear();
        }
      }
    } catch (const FormatError& err) {
      note = err.what();
      incumbent.clear();
      backend_status = "error";
    }
  }

  const bool backend_optimal = backend_status == "optimal" && !incumbent.empty();
  const double backend_obj = incumbent.empty() ? 0.0 : model.objective_value(incumbent);
  const double warm_obj = warm_valid ? model.objective_value(warm_point) : 0.0;
  auto better = [&](double a, double b) { return maximize ? a > b + 1e-9 : a < b - 1e-9; };

  if (!incumbent.empty() && (!warm_valid || !better(warm_obj, backend_obj))) {
    result.values = std::move(incumbent);
    result.objective = backend_obj;
    result.status = backend_optimal ? SolveStatus::Optimal : SolveStatus::FeasibleLimit;
    result.mip_gap = backend_gap;
    if (result.status == SolveStatus::Optimal && !result.mip_gap) result.mip_gap = 0.0;
  } else if (warm_valid) {
    result.values = std::move(warm_point);
    result.objective = warm_obj;
    result.status = SolveStatus::FeasibleLimit;
    result.used_warm_fallback = true;
    if (backend_status == "infeasible") {
      note = "backend reported infeasible but the warm start re-verifies feasible";
    }
  } else if (backend_status == "infeasible") {
    result.status = SolveStatus::Infeasible;
  } else if (backend_status == "no-incumbent" || backend_status == "feasible" ||
             backend_status == "optimal") {
    result.status = SolveStatus::NoIncumbent;
  } else {
    result.status = SolveStatus::Error;
  }
  result.message = note;

  if (std::getenv("FEWBIT_KEEP_SOLVE_FILES") == nullptr) {
    std::error_code ec;
    std::filesystem::remove_all(scratch, ec);
  }
  return result;
}

}  // namespace fewbit
