#include <catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "cfglyph/graph.hpp"

using namespace cfglyph;

namespace {

CausalGraph glyph_graph() {
  return build_graph({
      AttributeSpec::continuous("t", 1.0, 5.0),
      AttributeSpec::continuous("i", 0.3, 1.0, {"t"}),
      AttributeSpec::continuous("s", -1.0, 1.0),
      AttributeSpec::categorical("l", 4),
  });
}

std::vector<std::string> topo_names(const CausalGraph& g) {
  std::vector<std::string> names;
  for (std::size_t i : g.topo_order()) names.push_back(g.spec(i).name);
  return names;
}

std::set<std::string> desc_names(const CausalGraph& g, const std::vector<std::string>& roots) {
  std::set<std::string> names;
  for (std::size_t i : descendants(g, roots)) names.insert(g.spec(i).name);
  return names;
}

}  // namespace

TEST_CASE("glyph graph builds with the t->i edge") {
  const CausalGraph g = glyph_graph();
  CHECK(g.size() == 4);
  CHECK(g.parents_of(g.index_of("i")) == std::vector<std::size_t>{g.index_of("t")});
  CHECK(g.children_of(g.index_of("t")) == std::vector<std::size_t>{g.index_of("i")});
  CHECK(topo_names(g) == std::vector<std::string>{"t", "i", "s", "l"});
}

TEST_CASE("single attribute graph") {
  const CausalGraph g = build_graph({AttributeSpec::binary("only")});
  CHECK(g.size() == 1);
  CHECK(g.parents_of(0).empty());
  CHECK(g.children_of(0).empty());
}

TEST_CASE("two-cycle is rejected") {
  CHECK_THROWS_AS(build_graph({
                      AttributeSpec::binary("a", {"b"}),
                      AttributeSpec::binary("b", {"a"}),
                  }),
                  CycleError);
}

TEST_CASE("self parent is rejected") {
  CHECK_THROWS_AS(build_graph({AttributeSpec::binary("a", {"a"})}), CycleError);
}

TEST_CASE("longer cycle names one offending edge") {
  try {
    build_graph({
        AttributeSpec::binary("a", {"c"}),
        AttributeSpec::binary("b", {"a"}),
        AttributeSpec::binary("c", {"b"}),
    });
    FAIL("expected CycleError");
  } catch (const CycleError& e) {
    CHECK(std::string(e.what()).find("->") != std::string::npos);
  }
}

TEST_CASE("unknown parent is rejected") {
  CHECK_THROWS_AS(build_graph({AttributeSpec::binary("a", {"ghost"})}), UnknownParentError);
}

TEST_CASE("duplicate names and duplicate parents are rejected") {
  CHECK_THROWS_AS(build_graph({AttributeSpec::binary("a"), AttributeSpec::binary("a")}),
                  ConfigError);
  CHECK_THROWS_AS(build_graph({
                      AttributeSpec::binary("a"),
                      AttributeSpec::binary("b", {"a", "a"}),
                  }),
                  ConfigError);
}

TEST_CASE("kind constraints on edges") {
  // A linear equation cannot consume a category index as a number.
  CHECK_THROWS_AS(build_graph({
                      AttributeSpec::binary("a"),
                      AttributeSpec::categorical("l", 3),
                      AttributeSpec::continuous("x", 0.0, 1.0, {"l"}),
                  }),
                  ConfigError);
  // A binary table cannot be indexed by a continuous parent.
  CHECK_THROWS_AS(build_graph({
                      AttributeSpec::continuous("x", 0.0, 1.0),
                      AttributeSpec::binary("b", {"x"}),
                  }),
                  ConfigError);
  // Binary and categorical parents of a binary node are fine.
  const CausalGraph g = build_graph({
      AttributeSpec::binary("a"),
      AttributeSpec::categorical("l", 3),
      AttributeSpec::binary("b", {"a", "l"}),
  });
  CHECK(g.parents_of(g.index_of("b")).size() == 2);
}

TEST_CASE("range and cardinality invariants") {
  CHECK_THROWS_AS(build_graph({AttributeSpec::continuous("x", 2.0, 2.0)}), ConfigError);
  CHECK_THROWS_AS(build_graph({AttributeSpec::categorical("l", 1)}), ConfigError);
}

TEST_CASE("chain topological order") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("c", {"b"}),
      AttributeSpec::binary("b", {"a"}),
      AttributeSpec::binary("a"),
  });
  CHECK(topo_names(g) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("declaration order breaks topological ties") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("z"),
      AttributeSpec::binary("m"),
      AttributeSpec::binary("a"),
  });
  CHECK(topo_names(g) == std::vector<std::string>{"z", "m", "a"});
}

TEST_CASE("one hub parent precedes all its children") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("gray", {"young"}),
      AttributeSpec::binary("glasses", {"young"}),
      AttributeSpec::binary("hairline", {"young"}),
      AttributeSpec::binary("young"),
  });
  const std::vector<std::string> order = topo_names(g);
  CHECK(order.front() == "young");
}

TEST_CASE("topo order is a permutation that respects every edge") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("a"),
      AttributeSpec::binary("b", {"a"}),
      AttributeSpec::binary("c", {"a"}),
      AttributeSpec::binary("d", {"b", "c"}),
      AttributeSpec::binary("e", {"d", "a"}),
  });
  const std::vector<std::size_t>& order = g.topo_order();
  std::set<std::size_t> seen(order.begin(), order.end());
  REQUIRE(seen.size() == g.size());
  std::vector<std::size_t> pos(g.size());
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t p : g.parents_of(i)) CHECK(pos[p] < pos[i]);
}

TEST_CASE("descendants of thickness is intensity") {
  const CausalGraph g = glyph_graph();
  CHECK(desc_names(g, {"t"}) == std::set<std::string>{"i"});
  CHECK(desc_names(g, {"l"}).empty());
}

TEST_CASE("descendants over a chain is the full closure") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("a"),
      AttributeSpec::binary("b", {"a"}),
      AttributeSpec::binary("c", {"b"}),
  });
  CHECK(desc_names(g, {"a"}) == std::set<std::string>{"b", "c"});
  CHECK_THROWS_AS(descendants(g, {"nope"}), UnknownAttributeError);
}

TEST_CASE("mutilation removes exactly the in-edges of the targets") {
  const CausalGraph g = glyph_graph();
  const CausalGraph cut = mutilate(g, {"i"});
  CHECK(cut.parents_of(cut.index_of("i")).empty());
  CHECK(cut.children_of(cut.index_of("t")).empty());
  CHECK(cut.size() == g.size());
  // Original untouched.
  CHECK(g.parents_of(g.index_of("i")).size() == 1);

  // No-op when the target has no parents.
  const CausalGraph same = mutilate(g, {"t"});
  CHECK(same.parents_of(same.index_of("i")).size() == 1);
  CHECK_THROWS_AS(mutilate(g, {"nope"}), UnknownAttributeError);
}

TEST_CASE("cutting a chain in the middle isolates the upstream part") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("young"),
      AttributeSpec::binary("gray", {"young"}),
      AttributeSpec::binary("white", {"gray"}),
  });
  CHECK(desc_names(g, {"young"}) == std::set<std::string>{"gray", "white"});
  const CausalGraph cut = mutilate(g, {"gray"});
  CHECK(desc_names(cut, {"young"}).empty());
  CHECK(desc_names(cut, {"gray"}) == std::set<std::string>{"white"});
}

TEST_CASE("mutilated descendants are a subset of the original") {
  const CausalGraph g = build_graph({
      AttributeSpec::binary("a"),
      AttributeSpec::binary("b", {"a"}),
      AttributeSpec::binary("c", {"a", "b"}),
      AttributeSpec::binary("d", {"c"}),
  });
  for (const std::vector<std::string>& targets :
       std::vector<std::vector<std::string>>{{"b"}, {"c"}, {"b", "c"}, {"a"}}) {
    const CausalGraph cut = mutilate(g, targets);
    for (std::size_t i : descendants(cut, targets))
      CHECK(descendants(g, targets).count(i) == 1);
  }
}

TEST_CASE("graph JSON round trip preserves everything") {
  const CausalGraph g = glyph_graph();
  const CausalGraph back = graph_from_json(graph_to_json(g));
  CHECK(graph_to_json(back) == graph_to_json(g));
  CHECK(back.size() == g.size());
  CHECK(topo_names(back) == topo_names(g));
}

TEST_CASE("graph JSON rejects unknown fields and bad kinds") {
  auto j = graph_to_json(glyph_graph());
  j["attributes"][0]["surprise"] = 1;
  CHECK_THROWS_AS(graph_from_json(j), FormatError);

  auto j2 = graph_to_json(glyph_graph());
  j2["attributes"][0]["kind"] = "mystery";
  CHECK_THROWS_AS(graph_from_json(j2), FormatError);

  // Binary attributes carry no raw_range.
  auto j3 = graph_to_json(build_graph({AttributeSpec::binary("a")}));
  j3["attributes"][0]["raw_range"] = {0.0, 1.0};
  CHECK_THROWS_AS(graph_from_json(j3), FormatError);
}
