#pragma once

#include "nmdesc/logreg.hpp"
#include "nmdesc/matcomp.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>

namespace nmdesc {

using Instance = std::variant<LogRegInstance, McInstance>;

class InstanceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text format: a header line
///   nmdesc-instance 1 <kind> key=value ...
/// followed by sections "<name> <rows> <cols>" and rows of shortest
/// round-trip decimal numbers, so reading back reproduces every bit.
void write_instance(std::ostream& out, const LogRegInstance& inst);
void write_instance(std::ostream& out, const McInstance& inst);
void write_instance(std::ostream& out, const Instance& inst);

Instance read_instance(std::istream& in);
Instance load_instance(const std::string& path);
void save_instance(const std::string& path, const Instance& inst);

/// One-line summary: shape and seed plus ||A_tilde|| or sampling statistics.
std::string instance_digest(const Instance& inst);

}  // namespace nmdesc
