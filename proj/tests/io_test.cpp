#include <sstream>

#include <gtest/gtest.h>

#include "fraudgraph/errors.hpp"
#include "fraudgraph/io.hpp"

namespace fraudgraph {
namespace {

IngestResult ingest(const std::string& hard, const std::string& soft) {
  std::istringstream h(hard), s(soft);
  return ingest_edges(h, s);
}

TEST(Ingest, IndexesTokensInFirstAppearanceOrder) {
  const auto r = ingest("b\tphone\ta\n", "c\tcookie\ta\t2\t10\n");
  const auto& tokens = r.graph.tokens();
  EXPECT_EQ(tokens.tokens(), (std::vector<std::string>{"b", "a", "c"}));
  ASSERT_EQ(r.graph.soft_links().size(), 1u);
  const auto& s = r.graph.soft_links()[0];
  EXPECT_EQ(s.weight, 2.0);
  ASSERT_TRUE(s.day);
  EXPECT_EQ(*s.day, 10.0);
}

TEST(Ingest, DefaultsWeightAndSkipsCommentsAndBlanks) {
  const auto r = ingest("# header\n\n", "a\tip_address\tb\n");
  ASSERT_EQ(r.graph.soft_links().size(), 1u);
  EXPECT_EQ(r.graph.soft_links()[0].weight, 1.0);
  EXPECT_FALSE(r.graph.soft_links()[0].day);
}

TEST(Ingest, CollapsesRepeatedRecords) {
  const auto r = ingest("a\tphone\tb\nb\tphone\ta\na\temail\tb\n",
                        "a\tcookie\tb\t1\t3\nb\tcookie\ta\t4\t2\na\tip_address\tb\n");
  EXPECT_EQ(r.graph.hard_links().size(), 2u);
  EXPECT_EQ(r.report.duplicate_hard, 1u);
  ASSERT_EQ(r.graph.soft_links().size(), 2u);
  EXPECT_EQ(r.report.duplicate_soft, 1u);
  const auto& kept = r.graph.soft_links()[0];
  EXPECT_EQ(kept.weight, 4.0);
  EXPECT_EQ(*kept.day, 3.0);
}

TEST(Ingest, SkipsSelfLoops) {
  const auto r = ingest("a\tphone\ta\n", "b\tcookie\tb\n");
  EXPECT_EQ(r.report.self_loops_skipped, 2u);
  EXPECT_TRUE(r.graph.hard_links().empty());
  EXPECT_TRUE(r.graph.soft_links().empty());
}

TEST(Ingest, ReportsLineNumbers) {
  try {
    ingest("a\tphone\tb\na\tfax\tc\n", "");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(ingest("", "a\tcookie\tb\t-1\n"), ParseError);
  EXPECT_THROW(ingest("", "a\tcookie\tb\tx\n"), ParseError);
  EXPECT_THROW(ingest("a\tphone\n", ""), ParseError);
  EXPECT_THROW(ingest("", "a\tcookie\tb\t1\t2\t3\n"), ParseError);
}

TEST(Risk, AddsUnknownTokensAsIsolatedAccounts) {
  auto r = ingest("a\tphone\tb\n", "");
  std::istringstream risk("a\t2\nz\t1.5\n");
  read_risk_indicators(risk, r.graph);
  EXPECT_EQ(r.graph.num_accounts(), 3u);
  EXPECT_EQ(r.graph.risk_indicator(0), 2.0);
  EXPECT_EQ(r.graph.risk_indicator(2), 1.5);
}

TEST(TransformedFile, RoundTrips) {
  auto r = ingest("a\tphone\tb\n", "a\tcookie\tc\t1.25\nd\tcookie\tc\n");
  r.graph.set_risk_indicator(0, 3.0);
  const auto t = transform(r.graph);
  std::stringstream buffer;
  write_transformed(buffer, t, r.graph.tokens());
  const auto loaded = read_transformed(buffer);
  EXPECT_EQ(loaded.tokens.tokens(), r.graph.tokens().tokens());
  EXPECT_EQ(loaded.graph.membership, t.membership);
  EXPECT_EQ(loaded.graph.edges, t.edges);
  ASSERT_EQ(loaded.graph.num_super_nodes(), t.num_super_nodes());
  for (std::size_t s = 0; s < t.num_super_nodes(); ++s) {
    EXPECT_EQ(loaded.graph.super_nodes[s].members, t.super_nodes[s].members);
    EXPECT_EQ(loaded.graph.super_nodes[s].risk, t.super_nodes[s].risk);
  }
}

TEST(TransformedFile, RejectsMalformedInput) {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return read_transformed(in);
  };
  EXPECT_THROW(read("a\t0\n"), ParseError);
  EXPECT_THROW(read("#supernodes 1\na\t1\n"), ParseError);
  EXPECT_THROW(read("#supernodes 2\na\t0\nb\t1\nE\t1\t0\t1.0\n"), ParseError);
  EXPECT_THROW(read("#supernodes 2\na\t0\n"), DataError);
  EXPECT_THROW(read("#supernodes 1\na\t0\na\t0\n"), ParseError);
}

TEST(Format, FixedAndSignificant) {
  EXPECT_EQ(format_fixed(0.367879441, 6), "0.367879");
  EXPECT_EQ(format_fixed(1.0, 4), "1.0000");
  EXPECT_EQ(format_significant(0.1, 17), "0.10000000000000001");
  EXPECT_EQ(format_significant(2.0, 8), "2");
}

TEST(Records, SplitsOnTabs) {
  EXPECT_EQ(split_record("a\tb\t\tc"), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_TRUE(split_record("").empty());
  EXPECT_TRUE(split_record("# note").empty());
}

}  // namespace
}  // namespace fraudgraph
