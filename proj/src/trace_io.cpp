#include "nmdesc/trace.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

namespace nmdesc {

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::tolerance:
      return "tolerance";
    case StopReason::max_iters:
      return "max_iters";
    case StopReason::time_budget:
      return "time_budget";
    case StopReason::backtrack_limit:
      return "backtrack_limit";
    case StopReason::stagnation:
      return "stagnation";
  }
  return "unknown";
}

namespace {

const char* const kColumns[] = {"k",    "time_s",    "objective", "potential", "step_norm", "witness_norm", "beta",
                                "tau1", "tau2",      "backtracks", "ell",      "in_K1",     "in_K2",        "in_K31"};

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, std::size_t line) {
  if (tok.empty()) return kNaN;
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw TraceParseError("bad number '" + tok + "'", line);
  return v;
}

long long parse_int(const std::string& tok, std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw TraceParseError("bad integer '" + tok + "'", line);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool replay) {
  out << kTraceCsvVersion << '\n';
  bool first = true;
  for (const char* c : kColumns) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
  for (const TraceRecord& r : trace) {
    out << r.k << ',' << fmt(replay ? 0.0 : r.time_s) << ',' << fmt(r.objective) << ',' << fmt(r.potential) << ','
        << fmt(r.step_norm) << ',' << fmt(r.witness_norm) << ',' << fmt(r.beta) << ',' << fmt(r.tau1) << ','
        << fmt(r.tau2) << ',' << r.backtracks << ',' << r.ell << ',' << int(r.in_k1) << ',' << int(r.in_k2) << ','
        << int(r.in_k31) << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in, TraceColumns* present) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# nmdesc-trace", 0) == 0 && line != kTraceCsvVersion)
        throw TraceParseError("unsupported trace version '" + line + "'", line_no);
      continue;
    }
    header = split(line);
    break;
  }
  if (header.empty()) throw TraceParseError("missing header row", line_no);

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* req : {"k", "objective", "potential", "step_norm", "ell"})
    if (!col.count(req)) throw TraceParseError(std::string("missing required column '") + req + "'", line_no);
  TraceColumns cols;
  cols.witness = col.count("witness_norm") > 0;
  cols.ksets = col.count("in_K1") && col.count("in_K2") && col.count("in_K31");
  if (present) *present = cols;

  auto idx = [&](const char* name) -> long {
    const auto it = col.find(name);
    return it == col.end() ? -1 : static_cast<long>(it->second);
  };
  const long i_k = idx("k"), i_t = idx("time_s"), i_obj = idx("objective"), i_pot = idx("potential"),
             i_step = idx("step_norm"), i_w = idx("witness_norm"), i_beta = idx("beta"), i_tau1 = idx("tau1"),
             i_tau2 = idx("tau2"), i_bt = idx("backtracks"), i_ell = idx("ell"), i_k1 = idx("in_K1"),
             i_k2 = idx("in_K2"), i_k31 = idx("in_K31");

  std::vector<TraceRecord> trace;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size())
      throw TraceParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(cells.size()),
                            line_no);
    auto cell = [&](long i) -> const std::string& { return cells[static_cast<std::size_t>(i)]; };
    TraceRecord r;
    r.k = parse_int(cell(i_k), line_no);
    if (i_t >= 0) r.time_s = parse_double(cell(i_t), line_no);
    r.objective = parse_double(cell(i_obj), line_no);
    r.potential = parse_double(cell(i_pot), line_no);
    r.step_norm = parse_double(cell(i_step), line_no);
    if (i_w >= 0) r.witness_norm = parse_double(cell(i_w), line_no);
    if (i_beta >= 0) r.beta = parse_double(cell(i_beta), line_no);
    if (i_tau1 >= 0) r.tau1 = parse_double(cell(i_tau1), line_no);
    if (i_tau2 >= 0) r.tau2 = parse_double(cell(i_tau2), line_no);
    if (i_bt >= 0) r.backtracks = static_cast<int>(parse_int(cell(i_bt), line_no));
    r.ell = parse_int(cell(i_ell), line_no);
    if (i_k1 >= 0) r.in_k1 = parse_int(cell(i_k1), line_no) != 0;
    if (i_k2 >= 0) r.in_k2 = parse_int(cell(i_k2), line_no) != 0;
    if (i_k31 >= 0) r.in_k31 = parse_int(cell(i_k31), line_no) != 0;
    if (!trace.empty() && r.k <= trace.back().k)
      throw TraceParseError("iteration index must increase", line_no);
    trace.push_back(r);
  }
  return trace;
}

}  // namespace nmdesc
