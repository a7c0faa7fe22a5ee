#include "mbest/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace mbest {
namespace {

struct TokenLine {
  int number = 0;
  std::vector<std::string> tokens;
};

// Splits the stream into whitespace-tokenized lines, skipping blanks and
// '#' comments, and remembers line numbers for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  const std::string& source() const { return source_; }

  bool next(TokenLine& out) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++lineno_;
      out.tokens.clear();
      std::istringstream ss(raw);
      std::string tok;
      while (ss >> tok) out.tokens.push_back(tok);
      if (out.tokens.empty() || out.tokens[0][0] == '#') continue;
      out.number = lineno_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(int line, const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line) + ": " + what);
  }

  TokenLine expect(const std::string& keyword) {
    TokenLine line;
    if (!next(line))
      fail(lineno_, "unexpected end of file, expected '" + keyword + "'");
    if (line.tokens[0] != keyword)
      fail(line.number,
           "expected '" + keyword + "', found '" + line.tokens[0] + "'");
    return line;
  }

 private:
  std::istream& in_;
  std::string source_;
  int lineno_ = 0;
};

int parse_int(const LineReader& reader, const TokenLine& line,
              const std::string& tok, const std::string& field) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    reader.fail(line.number, "invalid integer '" + tok + "' in " + field);
  return static_cast<int>(v);
}

double parse_double(const LineReader& reader, const TokenLine& line,
                    const std::string& tok, const std::string& field) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    reader.fail(line.number, "invalid number '" + tok + "' in " + field);
  if (!std::isfinite(v))
    reader.fail(line.number, "non-finite energy '" + tok + "' in " + field);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MrfModel read_model(std::istream& in, const std::string& source) {
  LineReader reader(in, source);

  TokenLine header = reader.expect("mrf-model");
  if (header.tokens.size() != 2 || header.tokens[1] != "1")
    reader.fail(header.number, "unsupported model format version");

  TokenLine line = reader.expect("num_nodes");
  if (line.tokens.size() != 2)
    reader.fail(line.number, "num_nodes takes exactly one value");
  const int n = parse_int(reader, line, line.tokens[1], "num_nodes");
  if (n < 1) reader.fail(line.number, "num_nodes must be positive");

  line = reader.expect("cardinalities");
  if (static_cast<int>(line.tokens.size()) != n + 1)
    reader.fail(line.number, "expected " + std::to_string(n) +
                                 " cardinalities, found " +
                                 std::to_string(line.tokens.size() - 1));
  std::vector<int> cards(n);
  for (int i = 0; i < n; ++i) {
    cards[i] = parse_int(reader, line, line.tokens[i + 1], "cardinalities");
    if (cards[i] < 1)
      reader.fail(line.number,
                  "cardinality of node " + std::to_string(i) + " must be >= 1");
  }

  line = reader.expect("num_edges");
  if (line.tokens.size() != 2)
    reader.fail(line.number, "num_edges takes exactly one value");
  const int num_edges = parse_int(reader, line, line.tokens[1], "num_edges");
  if (num_edges < 0) reader.fail(line.number, "num_edges must be >= 0");

  std::vector<Edge> edges(num_edges);
  for (int e = 0; e < num_edges; ++e) {
    line = reader.expect("edge");
    if (line.tokens.size() != 3)
      reader.fail(line.number, "edge takes exactly two node ids");
    int i = parse_int(reader, line, line.tokens[1], "edge");
    int j = parse_int(reader, line, line.tokens[2], "edge");
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n || i == j)
      reader.fail(line.number, "edge (" + line.tokens[1] + ", " +
                                   line.tokens[2] + ") is not a valid pair");
    edges[e] = {i, j};
  }

  std::vector<Vector> unary(n, Vector());
  for (int k = 0; k < n; ++k) {
    line = reader.expect("unary");
    if (line.tokens.size() < 2)
      reader.fail(line.number, "unary line missing node id");
    int i = parse_int(reader, line, line.tokens[1], "unary");
    if (i < 0 || i >= n)
      reader.fail(line.number, "unary references unknown node " +
                                   std::to_string(i));
    if (unary[i].size() != 0)
      reader.fail(line.number,
                  "duplicate unary table for node " + std::to_string(i));
    const int count = static_cast<int>(line.tokens.size()) - 2;
    if (count != cards[i])
      reader.fail(line.number, "unary table for node " + std::to_string(i) +
                                   " has " + std::to_string(count) +
                                   " entries, expected " +
                                   std::to_string(cards[i]));
    unary[i].resize(cards[i]);
    for (int s = 0; s < cards[i]; ++s)
      unary[i][s] = parse_double(reader, line, line.tokens[s + 2], "unary");
  }

  std::map<Edge, int> edge_ids;
  for (int e = 0; e < num_edges; ++e) edge_ids.emplace(edges[e], e);

  std::vector<Matrix> pairwise;
  pairwise.reserve(num_edges);
  std::vector<bool> seen(num_edges, false);
  std::vector<Matrix> tables(num_edges);
  for (int k = 0; k < num_edges; ++k) {
    line = reader.expect("pairwise");
    if (line.tokens.size() < 3)
      reader.fail(line.number, "pairwise line missing node ids");
    const int i = parse_int(reader, line, line.tokens[1], "pairwise");
    const int j = parse_int(reader, line, line.tokens[2], "pairwise");
    if (i >= j)
      reader.fail(line.number,
                  "pairwise tables use the canonical orientation i < j");
    auto it = edge_ids.find({i, j});
    const int e = it == edge_ids.end() ? -1 : it->second;
    if (e < 0)
      reader.fail(line.number, "pairwise references unknown edge (" +
                                   std::to_string(i) + ", " +
                                   std::to_string(j) + ")");
    if (seen[e])
      reader.fail(line.number, "duplicate pairwise table for edge (" +
                                   std::to_string(i) + ", " +
                                   std::to_string(j) + ")");
    seen[e] = true;
    const int count = static_cast<int>(line.tokens.size()) - 3;
    if (count != cards[i] * cards[j])
      reader.fail(line.number,
                  "pairwise table for edge (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") has " + std::to_string(count) +
                      " entries, expected " + std::to_string(cards[i]) + "x" +
                      std::to_string(cards[j]));
    Matrix t(cards[i], cards[j]);
    int pos = 3;
    for (int s = 0; s < cards[i]; ++s)
      for (int u = 0; u < cards[j]; ++u)
        t(s, u) = parse_double(reader, line, line.tokens[pos++], "pairwise");
    tables[e] = std::move(t);
  }

  TokenLine extra;
  if (reader.next(extra))
    reader.fail(extra.number, "unexpected content after model body");

  for (int e = 0; e < num_edges; ++e) pairwise.push_back(std::move(tables[e]));
  try {
    return MrfModel(std::move(cards), std::move(edges), std::move(unary),
                    std::move(pairwise));
  } catch (const InvalidInput& err) {
    throw ParseError(source + ": " + err.what());
  }
}

MrfModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_model(in, path);
}

void write_model(const MrfModel& model, std::ostream& out) {
  out << "mrf-model 1\n";
  out << "num_nodes " << model.num_nodes() << "\n";
  out << "cardinalities";
  for (int c : model.cardinalities()) out << " " << c;
  out << "\n";
  out << "num_edges " << model.num_edges() << "\n";
  for (const auto& [i, j] : model.edges())
    out << "edge " << i << " " << j << "\n";
  for (int i = 0; i < model.num_nodes(); ++i) {
    out << "unary " << i;
    for (int s = 0; s < model.cardinality(i); ++s)
      out << " " << format_double(model.unary(i)[s]);
    out << "\n";
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    out << "pairwise " << i << " " << j;
    const Matrix& t = model.pairwise(e);
    for (int s = 0; s < t.rows(); ++s)
      for (int u = 0; u < t.cols(); ++u) out << " " << format_double(t(s, u));
    out << "\n";
  }
}

void save_model(const MrfModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  write_model(model, out);
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace mbest
