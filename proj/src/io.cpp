#include "fraudgraph/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "fraudgraph/errors.hpp"

namespace fraudgraph {

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string_view view(line);
  if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
  if (view.empty() || view.front() == '#') return fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = view.find('\t', start);
    fields.emplace_back(view.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

double parse_double(const std::string& text, const std::string& source, std::size_t line) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(source, line, "expected a number, got '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& text, const std::string& source, std::size_t line) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(source, line, "expected an integer, got '" + text + "'");
  }
  return value;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string format_significant(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

namespace {

void require_token(const std::string& token, const std::string& source, std::size_t line) {
  if (token.empty()) throw ParseError(source, line, "empty account token");
}

}  // namespace

IngestResult ingest_edges(std::istream& hard_source, std::istream& soft_source, const std::string& hard_name,
                          const std::string& soft_name) {
  IngestResult result;
  auto& g = result.graph;
  auto& report = result.report;

  std::unordered_map<std::uint64_t, std::uint8_t> hard_seen;  // pair -> kind bitmask
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(hard_source, line)) {
    ++lineno;
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (fields.size() != 3) throw ParseError(hard_name, lineno, "expected 3 tab-separated fields");
    require_token(fields[0], hard_name, lineno);
    require_token(fields[2], hard_name, lineno);
    const auto kind = parse_hard_kind(fields[1]);
    if (!kind) throw ParseError(hard_name, lineno, "unknown hard-link kind '" + fields[1] + "'");
    ++report.hard_records;
    if (fields[0] == fields[2]) {
      ++report.self_loops_skipped;
      continue;
    }
    auto u = g.add_account(fields[0]);
    auto v = g.add_account(fields[2]);
    const auto key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
    auto& mask = hard_seen[key];
    const auto bit = static_cast<std::uint8_t>(1u << static_cast<unsigned>(*kind));
    if (mask & bit) {
      ++report.duplicate_hard;
      continue;
    }
    mask |= bit;
    g.add_hard_link(u, v, *kind);
  }

  // (min, max, kind) -> position in the pending list
  std::map<std::tuple<AccountIndex, AccountIndex, SoftLinkKind>, std::size_t> soft_seen;
  std::vector<SoftLink> pending;
  lineno = 0;
  while (std::getline(soft_source, line)) {
    ++lineno;
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (fields.size() < 3 || fields.size() > 5) throw ParseError(soft_name, lineno, "expected 3 to 5 tab-separated fields");
    require_token(fields[0], soft_name, lineno);
    require_token(fields[2], soft_name, lineno);
    const auto kind = parse_soft_kind(fields[1]);
    if (!kind) throw ParseError(soft_name, lineno, "unknown soft-link kind '" + fields[1] + "'");
    SoftLink link{0, 0, *kind, 1.0, std::nullopt};
    if (fields.size() >= 4 && !fields[3].empty()) link.weight = parse_double(fields[3], soft_name, lineno);
    if (!(link.weight > 0.0)) throw ParseError(soft_name, lineno, "soft-link weight must be positive");
    if (fields.size() == 5) link.day = parse_double(fields[4], soft_name, lineno);
    ++report.soft_records;
    if (fields[0] == fields[2]) {
      ++report.self_loops_skipped;
      continue;
    }
    link.u = g.add_account(fields[0]);
    link.v = g.add_account(fields[2]);
    const auto key = std::make_tuple(std::min(link.u, link.v), std::max(link.u, link.v), link.kind);
    auto [it, inserted] = soft_seen.try_emplace(key, pending.size());
    if (inserted) {
      pending.push_back(link);
      continue;
    }
    ++report.duplicate_soft;
    auto& kept = pending[it->second];
    kept.weight = std::max(kept.weight, link.weight);
    if (link.day && (!kept.day || *link.day > *kept.day)) kept.day = link.day;
  }
  for (const auto& link : pending) g.add_soft_link(link);
  return result;
}

IngestResult ingest_edge_files(const std::filesystem::path& hard_path, const std::filesystem::path& soft_path) {
  auto hard = open_input(hard_path);
  auto soft = open_input(soft_path);
  return ingest_edges(hard, soft, hard_path.string(), soft_path.string());
}

void read_risk_indicators(std::istream& in, HeterogeneousGraph& g, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(name, lineno, "expected <token> <TAB> <value>");
    require_token(fields[0], name, lineno);
    const auto u = g.add_account(fields[0]);
    g.set_risk_indicator(u, parse_double(fields[1], name, lineno));
  }
}

void write_transformed(std::ostream& out, const TransformedGraph& g, const TokenMap& tokens) {
  out << "#supernodes " << g.num_super_nodes() << '\n';
  for (std::size_t u = 0; u < g.membership.size(); ++u) {
    out << tokens.token(static_cast<AccountIndex>(u)) << '\t' << g.membership[u] << '\n';
  }
  for (const auto& e : g.edges) {
    out << "E\t" << e.i << '\t' << e.j << '\t' << format_fixed(e.weight, 6) << '\n';
  }
  for (const auto& s : g.super_nodes) {
    if (s.risk != 0.0) out << "R\t" << s.id << '\t' << format_significant(s.risk, 17) << '\n';
  }
}

LoadedTransformedGraph read_transformed(std::istream& in, const std::string& name) {
  LoadedTransformedGraph loaded;
  auto& g = loaded.graph;
  std::string line;
  std::size_t lineno = 0;
  long long declared = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("#supernodes ", 0) == 0) {
      declared = parse_integer(line.substr(12), name, lineno);
      if (declared < 0) throw ParseError(name, lineno, "negative super-node count");
      g.super_nodes.resize(static_cast<std::size_t>(declared));
      for (std::size_t s = 0; s < g.super_nodes.size(); ++s) g.super_nodes[s].id = static_cast<SuperNodeIndex>(s);
      continue;
    }
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (declared < 0) throw ParseError(name, lineno, "record before #supernodes header");
    if (fields.size() == 4 && fields[0] == "E") {
      const auto i = parse_integer(fields[1], name, lineno);
      const auto j = parse_integer(fields[2], name, lineno);
      const auto w = parse_double(fields[3], name, lineno);
      if (i < 0 || j < 0 || i >= declared || j >= declared || i >= j) {
        throw ParseError(name, lineno, "edge endpoints must satisfy 0 <= i < j < k");
      }
      if (!(w > 0.0)) throw ParseError(name, lineno, "edge weight must be positive");
      g.edges.push_back({static_cast<SuperNodeIndex>(i), static_cast<SuperNodeIndex>(j), w});
    } else if (fields.size() == 3 && fields[0] == "R") {
      const auto s = parse_integer(fields[1], name, lineno);
      if (s < 0 || s >= declared) throw ParseError(name, lineno, "super-node id out of range");
      g.super_nodes[static_cast<std::size_t>(s)].risk = parse_double(fields[2], name, lineno);
    } else if (fields.size() == 2) {
      const auto s = parse_integer(fields[1], name, lineno);
      if (s < 0 || s >= declared) throw ParseError(name, lineno, "super-node id out of range");
      require_token(fields[0], name, lineno);
      if (loaded.tokens.find(fields[0])) throw ParseError(name, lineno, "duplicate token '" + fields[0] + "'");
      const auto u = loaded.tokens.intern(fields[0]);
      g.membership.push_back(static_cast<SuperNodeIndex>(s));
      g.super_nodes[static_cast<std::size_t>(s)].members.push_back(u);
    } else {
      throw ParseError(name, lineno, "unrecognised record");
    }
  }
  if (declared < 0) throw ParseError(name, lineno, "missing #supernodes header");
  for (const auto& node : g.super_nodes) {
    if (node.members.empty()) throw DataError(name + ": super-node " + std::to_string(node.id) + " has no members");
  }
  return loaded;
}

}  // namespace fraudgraph
