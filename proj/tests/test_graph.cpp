#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "gcpnn/gcpnn.hpp"
#include "oracles.hpp"

using namespace gcpnn;

TEST(Dimacs, ParsesSmallGraph) {
    const Graph g = parse_dimacs("p edge 3 2\ne 1 2\ne 2 3\n");
    EXPECT_EQ(g, Graph(3, {{0, 1}, {1, 2}}));
    EXPECT_EQ(parse_dimacs("p edge 2 0\n"), Graph(2));
}

TEST(Dimacs, SkipsCommentsAndAcceptsColFormat) {
    const Graph g = parse_dimacs("c hello\nc\np col 4 2\nn 1 3\ne 1 4\ne 4 1\ne 2 3\n");
    EXPECT_EQ(g.order(), 4);
    EXPECT_EQ(g.size(), 2u);
}

TEST(Dimacs, ErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text) {
        try {
            parse_dimacs(text);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(line_of("e 1 2\n").find("line 1"), std::string::npos);
    EXPECT_NE(line_of("p edge 3 1\ne 1 4\n").find("line 2"), std::string::npos);
    EXPECT_NE(line_of("p edge 3 1\ne 2 2\n").find("line 2"), std::string::npos);
    EXPECT_NE(line_of("c x\np edge 3 1\np edge 3 1\n").find("line 3"), std::string::npos);
    EXPECT_NE(line_of("p edge x 1\n").find("line 1"), std::string::npos);
    EXPECT_THROW(parse_dimacs("c only comments\n"), ParseError);
}

TEST(Dimacs, WriterFormat) {
    const std::string s = write_dimacs(Graph(2, {{0, 1}}));
    EXPECT_NE(s.find("p edge 2 1"), std::string::npos);
    EXPECT_NE(s.find("e 1 2"), std::string::npos);
    EXPECT_NE(write_dimacs(Graph(1)).find("p edge 1 0"), std::string::npos);
}

TEST(Dimacs, RoundTripsGeneratedGraphs) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Graph g = random_density_graph(15, 0.3, s);
        EXPECT_EQ(parse_dimacs(write_dimacs(g)), g);
        const Graph t = powerlaw_tree(20, 2.5, s);
        EXPECT_EQ(parse_dimacs(write_dimacs(t)), t);
    }
}

TEST(Dimacs, ShippedCorpusFiles) {
    std::ifstream in(std::string(GCPNN_DATA_DIR) + "/color/queen5_5.col");
    ASSERT_TRUE(in) << "data/color/queen5_5.col missing";
    const Graph g = parse_dimacs(in);
    EXPECT_EQ(g.order(), 25);
    EXPECT_EQ(g, queen_graph(5, 5));
}

TEST(Builders, KnownSizes) {
    EXPECT_EQ(complete_graph(5).size(), 10u);
    EXPECT_EQ(petersen_graph().size(), 15u);
    EXPECT_EQ(queen_graph(5, 5).size(), 160u);
    EXPECT_EQ(myciel(3).order(), 11);
    EXPECT_EQ(myciel(5).order(), 47);
    EXPECT_EQ(myciel(5).size(), 236u);
    EXPECT_EQ(myciel(6).order(), 95);
    EXPECT_EQ(myciel(7).order(), 191);
}

TEST(Graph, RejectsBadEdges) {
    Graph g(3);
    EXPECT_THROW(g.add_edge(0, 0), ArgumentError);
    EXPECT_THROW(g.add_edge(0, 3), ArgumentError);
    EXPECT_TRUE(g.add_edge(0, 1));
    EXPECT_FALSE(g.add_edge(1, 0));
    EXPECT_THROW(Graph(0), ArgumentError);
}

TEST(Generators, DensityExtremes) {
    EXPECT_EQ(random_density_graph(5, 0.0, 1).size(), 0u);
    EXPECT_EQ(random_density_graph(5, 1.0, 1), complete_graph(5));
    EXPECT_THROW(random_density_graph(5, 1.5, 1), ArgumentError);
}

TEST(Generators, DensityBinomialBand) {
    const double mean = 1225 * 0.5, sd = std::sqrt(1225 * 0.25);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const double m = static_cast<double>(random_density_graph(50, 0.5, s).size());
        EXPECT_LT(std::abs(m - mean), 5 * sd) << "seed " << s;
    }
}

TEST(Generators, Deterministic) {
    EXPECT_EQ(random_density_graph(30, 0.2, 9), random_density_graph(30, 0.2, 9));
    EXPECT_EQ(watts_strogatz(30, 4, 0.3, 9), watts_strogatz(30, 4, 0.3, 9));
    EXPECT_EQ(holme_kim(30, 3, 0.3, 9), holme_kim(30, 3, 0.3, 9));
    EXPECT_EQ(powerlaw_tree(30, 2.5, 9), powerlaw_tree(30, 2.5, 9));
}

TEST(Generators, PowerlawTreeIsTwoColourableTree) {
    EXPECT_EQ(powerlaw_tree(2, 3.0, 1).size(), 1u);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const int n = 2 + static_cast<int>(s % 60);
        const Graph t = powerlaw_tree(n, 2.5 + (s % 5) * 0.25, s);
        ASSERT_EQ(t.size(), static_cast<std::size_t>(n - 1)) << "seed " << s;
        ASSERT_TRUE(oracle::connected(t)) << "seed " << s;
        if (s % 50 == 0) EXPECT_EQ(chromatic_number(t).chi, 2);
    }
    // gamma <= 2 has an unbounded mean degree: long trees rarely hit 2(n - 1)
    EXPECT_THROW(powerlaw_tree(60, 1.5, 1, 100), GenerationError);
}

TEST(Generators, WattsStrogatz) {
    const Graph ring = watts_strogatz(8, 4, 0.0, 3);
    for (int v = 0; v < 8; ++v) EXPECT_EQ(ring.degree(v), 4);
    EXPECT_EQ(watts_strogatz(8, 2, 0.0, 3), cycle_graph(8));
    EXPECT_EQ(chromatic_number(watts_strogatz(8, 2, 0.0, 3)).chi, 2);
    for (std::uint64_t s = 0; s < 1000; ++s) ASSERT_EQ(watts_strogatz(32, 4, 0.25, s).size(), 64u) << "seed " << s;
    EXPECT_THROW(watts_strogatz(8, 8, 0.1, 1), ArgumentError);
    EXPECT_THROW(watts_strogatz(8, 3, 0.1, 1), ArgumentError);
}

namespace {
bool has_triangle(const Graph& g) {
    for (auto [u, v] : g.edges())
        for (int w : g.neighbours(u))
            if (w != v && g.has_edge(v, w)) return true;
    return false;
}
}  // namespace

TEST(Generators, HolmeKim) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Graph t = holme_kim(5, 1, 0.0, s);
        EXPECT_EQ(t.size(), 4u);
        EXPECT_TRUE(oracle::connected(t));
    }
    int with_triangle = 0;
    for (std::uint64_t s = 0; s < 20; ++s) with_triangle += has_triangle(holme_kim(32, 4, 0.1, s));
    EXPECT_GE(with_triangle, 19);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const Graph g = holme_kim(32, 4, 1.0, s);
        ASSERT_TRUE(has_triangle(g)) << "seed " << s;
        ASSERT_TRUE(oracle::connected(g));
    }
    EXPECT_GE(chromatic_number(holme_kim(32, 4, 1.0, 0)).chi, 3);
}

TEST(DisjointUnion, Segments) {
    const auto [u, seg] = disjoint_union({complete_graph(3), complete_graph(3)}, {3, 4});
    EXPECT_EQ(u.order(), 6);
    EXPECT_EQ(u.size(), 6u);
    ASSERT_EQ(seg.count(), 2u);
    EXPECT_EQ(seg.segments[0].vertex_begin, 0);
    EXPECT_EQ(seg.segments[0].vertex_end, 3);
    EXPECT_EQ(seg.segments[1].vertex_begin, 3);
    EXPECT_EQ(seg.segments[1].vertex_end, 6);
    EXPECT_EQ(seg.total_colours(), 7);
    EXPECT_FALSE(u.has_edge(2, 3));

    const Graph p = petersen_graph();
    EXPECT_EQ(disjoint_union({p}, {3}).first, p);
    EXPECT_THROW(disjoint_union({}, {}), ArgumentError);

    std::vector<Graph> many;
    std::vector<int> cs;
    for (int i = 0; i < 16; ++i) many.push_back(random_density_graph(40 + i, 0.2, i)), cs.push_back(4);
    const auto [big, bseg] = disjoint_union(many, cs);
    EXPECT_EQ(bseg.count(), 16u);
    EXPECT_EQ(big.order(), bseg.total_vertices());
}
