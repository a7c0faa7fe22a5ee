#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "mbest/model.hpp"

namespace mbest {

/// Raised on malformed model files; the message carries "<source>:<line>:"
/// context plus the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text form that round-trips a double exactly ("%.17g").
std::string format_double(double v);

/// Line-oriented model format:
///
///   mrf-model 1
///   num_nodes <n>
///   cardinalities <c_0> ... <c_{n-1}>
///   num_edges <e>
///   edge <i> <j>                     (e lines)
///   unary <i> <v_0> ... <v_{c_i-1}>  (n lines, any node order)
///   pairwise <i> <j> <row-major values>   (e lines, canonical i < j)
///
/// Blank lines and lines starting with '#' are ignored. Energies are written
/// with 17 significant digits so that load(save(m)) == m bit-exactly.
MrfModel read_model(std::istream& in, const std::string& source = "<stream>");
MrfModel load_model(const std::string& path);
void write_model(const MrfModel& model, std::ostream& out);
void save_model(const MrfModel& model, const std::string& path);

}  // namespace mbest
