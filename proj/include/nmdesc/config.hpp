#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmdesc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "key = value" text grouped under [section] headers. '#' and ';' start
/// comments. Keys outside any section belong to the empty section.
class IniFile {
 public:
  static IniFile parse(std::istream& in);
  static IniFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  const std::map<std::string, std::string>& section(const std::string& name) const;
  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }

  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

double parse_real(const std::string& text, const std::string& what);
std::int64_t parse_integer(const std::string& text, const std::string& what);
std::uint64_t parse_seed(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);
std::vector<std::string> split_list(const std::string& text, char sep = ',');

/// Problem family and generator parameters. An instance path, when given,
/// replaces generation; lambda and mu still override the file's values when set.
struct ProblemSpec {
  std::string kind = "logreg";  ///< logreg | mc | quad
  std::string instance_path;
  std::int64_t n = 200, p = 2000, s = 20;
  std::int64_t n1 = 200, n2 = 200, rstar = 5, r = 10, samples = 8000;
  double sigma = 0.1;
  std::int64_t dim = 20;  ///< quad only
  std::optional<double> lambda;
  std::optional<double> mu;
  std::string lipschitz = "conservative";  ///< logreg: conservative | paper
};

/// Solver name plus raw parameter overrides, e.g. "pgenls:m=2:delta=0.01".
struct SolverSpec {
  std::string name;
  std::map<std::string, std::string> params;

  static SolverSpec parse(const std::string& text);
  std::string label() const;
};

const std::vector<std::string>& known_solvers();
bool is_pg_family(const std::string& name);    ///< pgenls, pgnls, pgels, pgls, fista, refista
bool is_palm_family(const std::string& name);  ///< palmenls, palmnls, palmels, palmls, palm, palme

struct RunLimits {
  std::int64_t max_iters = 5000;
  double time_budget = std::numeric_limits<double>::infinity();
  double stop_tol = 1e-8;
};

struct RunConfig {
  ProblemSpec problem;
  SolverSpec solver;
  RunLimits limits;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  bool replay = false;
};

enum class BenchClock { time, iterations };

struct BenchConfig {
  ProblemSpec problem;
  std::vector<SolverSpec> solvers;
  std::vector<double> lambdas;  ///< one panel each; empty means the problem's lambda
  RunLimits limits;
  std::int64_t trials = 5;
  std::int64_t grid_points = 200;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  bool replay = false;
  BenchClock clock = BenchClock::time;  ///< replay forces iterations
};

ProblemSpec parse_problem_spec(const IniFile& ini);
RunConfig parse_run_config(const IniFile& ini);
BenchConfig parse_bench_config(const IniFile& ini);

/// NMDESC_SEED, when set, overrides the configured seed.
std::uint64_t seed_from_environment(std::uint64_t configured);

}  // namespace nmdesc
