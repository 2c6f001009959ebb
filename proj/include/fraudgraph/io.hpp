#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "fraudgraph/graph.hpp"

namespace fraudgraph {

struct IngestReport {
  std::size_t hard_records = 0;
  std::size_t soft_records = 0;
  std::size_t self_loops_skipped = 0;
  std::size_t duplicate_hard = 0;
  std::size_t duplicate_soft = 0;
};

struct IngestResult {
  HeterogeneousGraph graph;
  IngestReport report;
};

/// Reads tab-separated hard- and soft-link records. Tokens are indexed in
/// order of first appearance (hard stream first). Repeated (u, v, kind)
/// records collapse into a single link: hard links are idempotent, a
/// repeated soft observation keeps the larger weight and the latest day.
/// Throws ParseError naming the offending line.
IngestResult ingest_edges(std::istream& hard_source, std::istream& soft_source,
                          const std::string& hard_name = "hard", const std::string& soft_name = "soft");

IngestResult ingest_edge_files(const std::filesystem::path& hard_path, const std::filesystem::path& soft_path);

/// `<token> <TAB> <value>` lines; tokens not already in the graph are added
/// as isolated accounts.
void read_risk_indicators(std::istream& in, HeterogeneousGraph& g, const std::string& name = "risk");

/// `#supernodes <k>`, membership lines, `E <TAB> i <TAB> j <TAB> w` edges, then
/// `R <TAB> id <TAB> risk` for super-nodes with nonzero aggregated risk.
void write_transformed(std::ostream& out, const TransformedGraph& g, const TokenMap& tokens);

struct LoadedTransformedGraph {
  TransformedGraph graph;
  TokenMap tokens;
};
LoadedTransformedGraph read_transformed(std::istream& in, const std::string& name = "transformed");

/// Formats a double with printf-style `%.<digits>f` / `%.<digits>g`.
std::string format_fixed(double value, int decimals);
std::string format_significant(double value, int digits);

/// Splits on TAB. Returns empty vector for blank lines and `#` comments.
std::vector<std::string> split_record(const std::string& line);

/// Parses a double; throws ParseError on garbage or trailing characters.
double parse_double(const std::string& text, const std::string& source, std::size_t line);
long long parse_integer(const std::string& text, const std::string& source, std::size_t line);

std::ifstream open_input(const std::filesystem::path& path);

}  // namespace fraudgraph
