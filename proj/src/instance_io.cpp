#include "nmdesc/instance_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace nmdesc {

namespace {

constexpr const char* kMagic = "nmdesc-instance";
constexpr int kVersion = 1;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_section(std::ostream& out, const std::string& name, const MatrixX<double>& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw InstanceFormatError("bad number '" + tok + "'");
  return v;
}

long long parse_int(const std::string& tok) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw InstanceFormatError("bad integer '" + tok + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& tok) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw InstanceFormatError("bad unsigned integer '" + tok + "'");
  return v;
}

struct Header {
  std::string kind;
  std::map<std::string, std::string> params;

  const std::string& get(const std::string& key) const {
    const auto it = params.find(key);
    if (it == params.end()) throw InstanceFormatError("header is missing '" + key + "'");
    return it->second;
  }
};

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InstanceFormatError("empty instance file");
  std::istringstream ss(line);
  std::string magic, version;
  Header h;
  ss >> magic >> version >> h.kind;
  if (magic != kMagic) throw InstanceFormatError("not an nmdesc instance file");
  if (version != std::to_string(kVersion)) throw InstanceFormatError("unsupported instance version " + version);
  std::string kv;
  while (ss >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InstanceFormatError("bad header field '" + kv + "'");
    h.params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return h;
}

MatrixX<double> read_section(std::istream& in, const std::string& expected) {
  std::string name, rows_tok, cols_tok;
  if (!(in >> name >> rows_tok >> cols_tok)) throw InstanceFormatError("missing section '" + expected + "'");
  if (name != expected) throw InstanceFormatError("expected section '" + expected + "', found '" + name + "'");
  const long long rows = parse_int(rows_tok), cols = parse_int(cols_tok);
  if (rows < 0 || cols < 0) throw InstanceFormatError("negative shape in section '" + name + "'");
  MatrixX<double> m(rows, cols);
  std::string tok;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> tok)) throw InstanceFormatError("truncated section '" + name + "'");
      m(i, j) = parse_double(tok);
    }
  return m;
}

}  // namespace

void write_instance(std::ostream& out, const LogRegInstance& inst) {
  out << kMagic << ' ' << kVersion << " logreg n=" << inst.n << " p=" << inst.p << " s=" << inst.s
      << " seed=" << inst.seed << " lambda=" << fmt(inst.lambda) << " mu=" << fmt(inst.mu) << '\n';
  write_section(out, "A_tilde", inst.A_tilde);
  write_section(out, "b", inst.b);
  MatrixX<double> support(static_cast<Index>(inst.support.size()), 1);
  for (std::size_t i = 0; i < inst.support.size(); ++i) support(static_cast<Index>(i), 0) = static_cast<double>(inst.support[i]);
  write_section(out, "support", support);
  write_section(out, "x_hat", inst.x_hat);
}

void write_instance(std::ostream& out, const McInstance& inst) {
  out << kMagic << ' ' << kVersion << " mc n1=" << inst.n1 << " n2=" << inst.n2 << " rstar=" << inst.r_star
      << " r=" << inst.r << " samples=" << inst.num_samples << " sigma=" << fmt(inst.sigma) << " seed=" << inst.seed
      << " lambda=" << fmt(inst.lambda) << " mu=" << fmt(inst.mu) << '\n';
  MatrixX<double> omega(static_cast<Index>(inst.omega.size()), 2);
  for (std::size_t t = 0; t < inst.omega.size(); ++t) {
    omega(static_cast<Index>(t), 0) = static_cast<double>(inst.omega[t].first);
    omega(static_cast<Index>(t), 1) = static_cast<double>(inst.omega[t].second);
  }
  write_section(out, "omega", omega);
  write_section(out, "m_obs", inst.m_obs);
  write_section(out, "U_star", inst.U_star);
  write_section(out, "V_star", inst.V_star);
}

void write_instance(std::ostream& out, const Instance& inst) {
  std::visit([&out](const auto& v) { write_instance(out, v); }, inst);
}

Instance read_instance(std::istream& in) {
  const Header h = read_header(in);
  if (h.kind == "logreg") {
    LogRegInstance inst;
    inst.n = parse_int(h.get("n"));
    inst.p = parse_int(h.get("p"));
    inst.s = parse_int(h.get("s"));
    inst.seed = parse_u64(h.get("seed"));
    inst.lambda = parse_double(h.get("lambda"));
    inst.mu = parse_double(h.get("mu"));
    inst.A_tilde = read_section(in, "A_tilde");
    inst.b = read_section(in, "b");
    const MatrixX<double> support = read_section(in, "support");
    for (Index i = 0; i < support.rows(); ++i) inst.support.push_back(static_cast<Index>(support(i, 0)));
    inst.x_hat = read_section(in, "x_hat");
    try {
      validate(inst);
    } catch (const std::invalid_argument& e) {
      throw InstanceFormatError(e.what());
    }
    return inst;
  }
  if (h.kind == "mc") {
    McInstance inst;
    inst.n1 = parse_int(h.get("n1"));
    inst.n2 = parse_int(h.get("n2"));
    inst.r_star = parse_int(h.get("rstar"));
    inst.r = parse_int(h.get("r"));
    inst.num_samples = parse_int(h.get("samples"));
    inst.sigma = parse_double(h.get("sigma"));
    inst.seed = parse_u64(h.get("seed"));
    inst.lambda = parse_double(h.get("lambda"));
    inst.mu = parse_double(h.get("mu"));
    const MatrixX<double> omega = read_section(in, "omega");
    if (omega.cols() != 2 && omega.rows() > 0) throw InstanceFormatError("omega must have two columns");
    for (Index t = 0; t < omega.rows(); ++t)
      inst.omega.emplace_back(static_cast<Index>(omega(t, 0)), static_cast<Index>(omega(t, 1)));
    inst.m_obs = read_section(in, "m_obs");
    inst.U_star = read_section(in, "U_star");
    inst.V_star = read_section(in, "V_star");
    try {
      validate(inst);
    } catch (const std::invalid_argument& e) {
      throw InstanceFormatError(e.what());
    }
    return inst;
  }
  throw InstanceFormatError("unknown instance kind '" + h.kind + "'");
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open instance file " + path);
  return read_instance(in);
}

void save_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write instance file " + path);
  write_instance(out, inst);
  out.flush();
  if (!out) throw std::ios_base::failure("error writing instance file " + path);
}

std::string instance_digest(const Instance& inst) {
  std::ostringstream ss;
  if (const auto* lr = std::get_if<LogRegInstance>(&inst)) {
    ss << "logreg n=" << lr->n << " p=" << lr->p << " s=" << lr->s << " seed=" << lr->seed
       << " |A_tilde|=" << fmt(spectral_norm(lr->A_tilde));
  } else {
    const auto& mc = std::get<McInstance>(inst);
    const auto [rmin, rmax] = [&] {
      std::vector<Index> counts(static_cast<std::size_t>(mc.n1), 0);
      for (const auto& e : mc.omega) ++counts[static_cast<std::size_t>(e.first)];
      const auto mm = std::minmax_element(counts.begin(), counts.end());
      return std::pair<Index, Index>(*mm.first, *mm.second);
    }();
    ss << "mc n1=" << mc.n1 << " n2=" << mc.n2 << " rstar=" << mc.r_star << " r=" << mc.r << " seed=" << mc.seed
       << " samples=" << mc.num_samples << " |Omega|=" << mc.omega.size() << " row_count_min=" << rmin
       << " row_count_max=" << rmax;
  }
  return ss.str();
}

}  // namespace nmdesc
