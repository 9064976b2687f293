#include "nmdesc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <system_error>

namespace nmdesc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void require_known_keys(const IniFile& ini, const std::string& section, const std::set<std::string>& allowed) {
  if (!ini.has_section(section)) return;
  for (const auto& [key, value] : ini.section(section))
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
}

}  // namespace

IniFile IniFile::parse(std::istream& in) {
  IniFile ini;
  std::string line, current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      ini.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    auto& sec = ini.sections_[current];
    if (sec.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    sec[key] = trim(line.substr(eq + 1));
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file " + path);
  return parse(in);
}

bool IniFile::has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

std::optional<std::string> IniFile::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string IniFile::get_or(const std::string& section, const std::string& key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

const std::map<std::string, std::string>& IniFile::section(const std::string& name) const {
  static const std::map<std::string, std::string> empty;
  const auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

void IniFile::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

double parse_real(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  return v;
}

std::int64_t parse_integer(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  return v;
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(what + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> names = {"pgenls",   "pgnls",   "pgels",  "pgls",   "fista", "refista",
                                                 "palmenls", "palmnls", "palmels", "palmls", "palm",  "palme"};
  return names;
}

bool is_pg_family(const std::string& name) {
  return name == "pgenls" || name == "pgnls" || name == "pgels" || name == "pgls" || name == "fista" ||
         name == "refista";
}

bool is_palm_family(const std::string& name) {
  return name == "palmenls" || name == "palmnls" || name == "palmels" || name == "palmls" || name == "palm" ||
         name == "palme";
}

SolverSpec SolverSpec::parse(const std::string& text) {
  const std::vector<std::string> parts = split_list(text, ':');
  if (parts.empty()) throw ConfigError("empty solver specification");
  SolverSpec spec;
  spec.name = parts.front();
  const auto& names = known_solvers();
  if (std::find(names.begin(), names.end(), spec.name) == names.end())
    throw ConfigError("unknown solver '" + spec.name + "'");
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw ConfigError("solver parameter '" + parts[i] + "' is not key=value");
    spec.params[trim(parts[i].substr(0, eq))] = trim(parts[i].substr(eq + 1));
  }
  return spec;
}

std::string SolverSpec::label() const {
  std::string out = name;
  for (const auto& [k, v] : params) out += ":" + k + "=" + v;
  return out;
}

ProblemSpec parse_problem_spec(const IniFile& ini) {
  require_known_keys(ini, "problem",
                     {"kind", "instance", "n", "p", "s", "n1", "n2", "rstar", "r", "samples", "sigma", "dim", "lambda",
                      "mu", "lipschitz"});
  ProblemSpec p;
  const std::string sec = "problem";
  p.kind = ini.get_or(sec, "kind", p.kind);
  if (p.kind != "logreg" && p.kind != "mc" && p.kind != "quad")
    throw ConfigError("problem.kind must be logreg, mc or quad");
  p.instance_path = ini.get_or(sec, "instance", "");
  auto int_key = [&](const char* key, std::int64_t& field) {
    if (auto v = ini.get(sec, key)) field = parse_integer(*v, std::string("problem.") + key);
  };
  int_key("n", p.n);
  int_key("p", p.p);
  int_key("s", p.s);
  int_key("n1", p.n1);
  int_key("n2", p.n2);
  int_key("rstar", p.rstar);
  int_key("r", p.r);
  int_key("samples", p.samples);
  int_key("dim", p.dim);
  if (auto v = ini.get(sec, "sigma")) p.sigma = parse_real(*v, "problem.sigma");
  if (auto v = ini.get(sec, "lambda")) p.lambda = parse_real(*v, "problem.lambda");
  if (auto v = ini.get(sec, "mu")) p.mu = parse_real(*v, "problem.mu");
  p.lipschitz = ini.get_or(sec, "lipschitz", p.lipschitz);
  if (p.lipschitz != "conservative" && p.lipschitz != "paper")
    throw ConfigError("problem.lipschitz must be conservative or paper");
  return p;
}

namespace {

RunLimits parse_limits(const IniFile& ini, const std::string& sec) {
  RunLimits l;
  if (auto v = ini.get(sec, "max_iters")) l.max_iters = parse_integer(*v, sec + ".max_iters");
  if (auto v = ini.get(sec, "time_budget")) l.time_budget = parse_real(*v, sec + ".time_budget");
  if (auto v = ini.get(sec, "stop_tol")) l.stop_tol = parse_real(*v, sec + ".stop_tol");
  if (l.max_iters < 1) throw ConfigError(sec + ".max_iters must be positive");
  if (!(l.time_budget > 0)) throw ConfigError(sec + ".time_budget must be positive");
  if (!(l.stop_tol >= 0)) throw ConfigError(sec + ".stop_tol must be nonnegative");
  return l;
}

}  // namespace

RunConfig parse_run_config(const IniFile& ini) {
  require_known_keys(ini, "run", {"seed", "output", "max_iters", "time_budget", "stop_tol", "replay"});
  RunConfig cfg;
  cfg.problem = parse_problem_spec(ini);
  const auto& solver = ini.section("solver");
  const auto name = solver.find("name");
  if (name == solver.end()) throw ConfigError("[solver] needs a name");
  cfg.solver = SolverSpec::parse(name->second);
  for (const auto& [k, v] : solver)
    if (k != "name") cfg.solver.params[k] = v;
  cfg.limits = parse_limits(ini, "run");
  if (auto v = ini.get("run", "seed")) cfg.seed = parse_seed(*v, "run.seed");
  cfg.output_dir = ini.get_or("run", "output", cfg.output_dir);
  if (auto v = ini.get("run", "replay")) cfg.replay = parse_bool(*v, "run.replay");
  return cfg;
}

BenchConfig parse_bench_config(const IniFile& ini) {
  require_known_keys(ini, "bench",
                     {"solvers", "lambdas", "trials", "grid_points", "seed", "output", "replay", "clock", "max_iters",
                      "time_budget", "stop_tol"});
  BenchConfig cfg;
  cfg.problem = parse_problem_spec(ini);
  const std::string sec = "bench";
  for (const std::string& s : split_list(ini.get_or(sec, "solvers", ""))) cfg.solvers.push_back(SolverSpec::parse(s));
  for (const std::string& s : split_list(ini.get_or(sec, "lambdas", "")))
    cfg.lambdas.push_back(parse_real(s, "bench.lambdas"));
  cfg.limits = parse_limits(ini, sec);
  if (auto v = ini.get(sec, "trials")) cfg.trials = parse_integer(*v, "bench.trials");
  if (auto v = ini.get(sec, "grid_points")) cfg.grid_points = parse_integer(*v, "bench.grid_points");
  if (auto v = ini.get(sec, "seed")) cfg.seed = parse_seed(*v, "bench.seed");
  cfg.output_dir = ini.get_or(sec, "output", cfg.output_dir);
  if (auto v = ini.get(sec, "replay")) cfg.replay = parse_bool(*v, "bench.replay");
  const std::string clock = ini.get_or(sec, "clock", "time");
  if (clock == "time")
    cfg.clock = BenchClock::time;
  else if (clock == "iterations")
    cfg.clock = BenchClock::iterations;
  else
    throw ConfigError("bench.clock must be time or iterations");
  if (cfg.replay) cfg.clock = BenchClock::iterations;
  if (cfg.solvers.size() < 2) throw ConfigError("bench needs at least two solvers");
  if (cfg.trials < 1) throw ConfigError("bench.trials must be positive");
  if (cfg.grid_points < 2) throw ConfigError("bench.grid_points must be at least 2");
  return cfg;
}

std::uint64_t seed_from_environment(std::uint64_t configured) {
  const char* env = std::getenv("NMDESC_SEED");
  if (!env || !*env) return configured;
  return parse_seed(env, "NMDESC_SEED");
}

}  // namespace nmdesc
