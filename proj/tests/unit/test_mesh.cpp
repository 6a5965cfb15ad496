// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "decalforge/mesh.hpp"
#include "decalforge/primitives.hpp"
#include "test_util.hpp"

namespace decalforge {
namespace {

using testing::TempDir;

TriMesh all_area(const TriMesh& m) { return m.with_uv_area(std::vector<std::uint8_t>(m.num_faces(), 1)); }

// Edge list with Euclidean weights, built straight from the faces.
std::map<std::pair<int, int>, double> edges_of(const TriMesh& m) {
    std::map<std::pair<int, int>, double> e;
    for (const Face& f : m.faces()) {
        for (int k = 0; k < 3; ++k) {
            const int a = std::min(f[k], f[(k + 1) % 3]);
            const int b = std::max(f[k], f[(k + 1) % 3]);
            e[{a, b}] = (m.vertex(a) - m.vertex(b)).norm();
        }
    }
    return e;
}

std::vector<std::vector<double>> floyd_warshall(const TriMesh& m) {
    const int n = m.num_vertices();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
    for (int i = 0; i < n; ++i) {
        d[i][i] = 0.0;
    }
    for (const auto& [k, w] : edges_of(m)) {
        d[k.first][k.second] = d[k.second][k.first] = w;
    }
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
            }
        }
    }
    return d;
}

void all_simple_paths(int at, int goal, double len, const std::vector<std::vector<std::pair<int, double>>>& adj,
                      std::vector<bool>& seen, double& best) {
    if (at == goal) {
        best = std::min(best, len);
        return;
    }
    for (const auto& [nb, w] : adj[at]) {
        if (!seen[nb]) {
            seen[nb] = true;
            all_simple_paths(nb, goal, len + w, adj, seen, best);
            seen[nb] = false;
        }
    }
}

TEST(TriMesh, UnitCubeCounts) {
    const TriMesh cube = primitives::unit_cube();
    EXPECT_EQ(cube.num_vertices(), 8);
    EXPECT_EQ(cube.num_faces(), 12);
}

TEST(TriMesh, IndexOutOfRangeIsParseError) {
    std::vector<Vec3> v(8, Vec3::Zero());
    for (int i = 0; i < 8; ++i) {
        v[i] = Vec3(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    }
    EXPECT_THROW(TriMesh::from_arrays(v, {{0, 1, 9}}), ParseError);
    EXPECT_THROW(TriMesh::from_arrays(v, {{0, -1, 2}}), ParseError);
}

TEST(TriMesh, FlatSquareNormals) {
    const TriMesh sq = TriMesh::from_arrays({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
    for (const Vec3& n : sq.vertex_normals()) {
        EXPECT_NEAR((n - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
    }
}

TEST(TriMesh, DropsDegenerateAndPrunes) {
    const TriMesh m = TriMesh::from_arrays({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}, {5, 5, 5}},
                                           {{0, 1, 2}, {0, 1, 3}});
    EXPECT_EQ(m.num_faces(), 1);
    EXPECT_EQ(m.num_vertices(), 3);
    ASSERT_EQ(m.warnings().size(), 2u);
    EXPECT_NE(m.warnings()[0].find("degenerate"), std::string::npos);
    EXPECT_NE(m.warnings()[1].find("pruned"), std::string::npos);
}

TEST(TriMesh, InvariantsOnPrimitives) {
    for (const TriMesh& m : {primitives::unit_cube(), primitives::uv_sphere(1.0, 12, 8),
                             primitives::grid(4, 3, 0.5), primitives::cylinder_patch(1.0, 1.5, 1.0, 6, 4)}) {
        std::vector<int> refs(m.num_vertices(), 0);
        for (const Face& f : m.faces()) {
            for (int v : f) {
                ASSERT_GE(v, 0);
                ASSERT_LT(v, m.num_vertices());
                ++refs[v];
            }
        }
        for (int r : refs) {
            EXPECT_GE(r, 1);
        }
        for (const Vec3& n : m.vertex_normals()) {
            EXPECT_NEAR(n.norm(), 1.0, 1e-6);
        }
    }
}

TEST(Obj, ParsesQuadsAndNormals) {
    const TriMesh m = parse_obj("# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n");
    EXPECT_EQ(m.num_vertices(), 4);
    EXPECT_EQ(m.num_faces(), 2);
}

TEST(Obj, ErrorsCarryLineNumbers) {
    try {
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4);
    }
    try {
        parse_obj("v 0 0 0\nv 1 zero 0\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
    }
    EXPECT_THROW(parse_obj("v 0 0 0\nf 1 1\n"), ParseError);
}

TEST(Obj, SaveLoadRoundTrip) {
    TempDir dir;
    const TriMesh m = primitives::uv_sphere(1.0, 8, 6);
    save_mesh(m, dir / "s.obj");
    const TriMesh back = load_mesh(dir / "s.obj");
    ASSERT_EQ(back.num_faces(), m.num_faces());
    ASSERT_EQ(back.num_vertices(), m.num_vertices());
    for (int v = 0; v < m.num_vertices(); ++v) {
        EXPECT_NEAR((back.vertex(v) - m.vertex(v)).norm(), 0.0, 1e-9);
    }
    EXPECT_THROW(load_mesh(dir / "missing.obj"), IoError);
}

TEST(SelectRegion, CubeBudgetTwo) {
    const TriMesh cube = primitives::unit_cube();
    const TriMesh r = select_region(cube, 0, 2);
    const auto nb = face_edge_neighbors(cube);
    std::vector<int> picked;
    for (int f = 0; f < r.num_faces(); ++f) {
        if (r.in_uv_area(f)) {
            picked.push_back(f);
        }
    }
    ASSERT_EQ(picked.size(), 2u);
    EXPECT_EQ(picked[0], 0);
    EXPECT_NE(std::find(nb[0].begin(), nb[0].end(), picked[1]), nb[0].end());
}

TEST(SelectRegion, LargeBudgetTakesAll) {
    const TriMesh cube = primitives::unit_cube();
    const TriMesh r = select_region(cube, 5, 100);
    for (int f = 0; f < r.num_faces(); ++f) {
        EXPECT_TRUE(r.in_uv_area(f));
    }
}

TEST(SelectRegion, IsolatedTriangle) {
    const TriMesh m = primitives::merge(primitives::unit_cube(),
                                        TriMesh::from_arrays({{5, 5, 5}, {6, 5, 5}, {5, 6, 5}}, {{0, 1, 2}}));
    const TriMesh r = select_region(m, 12, 100);
    int n = 0;
    for (int f = 0; f < r.num_faces(); ++f) {
        n += r.in_uv_area(f) ? 1 : 0;
    }
    EXPECT_EQ(n, 1);
    EXPECT_TRUE(r.in_uv_area(12));
    EXPECT_THROW(select_region(m, 13, 1), Error);
}

TEST(SelectRegion, NeighborListsSortedAndSymmetric) {
    const TriMesh m = primitives::uv_sphere(1.0, 10, 6);
    const auto nb = face_edge_neighbors(m);
    for (int f = 0; f < m.num_faces(); ++f) {
        EXPECT_TRUE(std::is_sorted(nb[f].begin(), nb[f].end()));
        for (int g : nb[f]) {
            EXPECT_NE(std::find(nb[g].begin(), nb[g].end(), f), nb[g].end());
        }
    }
}

TEST(SelectRegion, InvariantToVertexRelabeling) {
    // Relabeling vertices keeps face indices, so the selection must not change.
    const TriMesh m = primitives::uv_sphere(1.0, 10, 6);
    std::vector<int> perm(m.num_vertices());
    for (int i = 0; i < m.num_vertices(); ++i) {
        perm[i] = m.num_vertices() - 1 - i;
    }
    std::vector<Vec3> v(m.num_vertices());
    for (int i = 0; i < m.num_vertices(); ++i) {
        v[perm[i]] = m.vertex(i);
    }
    std::vector<Face> f;
    for (const Face& t : m.faces()) {
        f.push_back({perm[t[0]], perm[t[1]], perm[t[2]]});
    }
    const TriMesh p = TriMesh::from_arrays(v, f);
    EXPECT_EQ(select_region(m, 7, 23).uv_area_flags(), select_region(p, 7, 23).uv_area_flags());
}

TEST(Geodesic, TrivialCases) {
    const TriMesh g = all_area(primitives::grid(3, 3, 1.0));
    EXPECT_DOUBLE_EQ(geodesic_distance(g, 0, 1), 1.0);
    EXPECT_DOUBLE_EQ(geodesic_distance(g, 5, 5), 0.0);
}

TEST(Geodesic, MatchesBruteForceOnSmallGrid) {
    const TriMesh g = all_area(primitives::grid(3, 3, 1.0));
    std::vector<std::vector<std::pair<int, double>>> adj(g.num_vertices());
    for (const auto& [k, w] : edges_of(g)) {
        adj[k.first].push_back({k.second, w});
        adj[k.second].push_back({k.first, w});
    }
    for (int a = 0; a < g.num_vertices(); ++a) {
        for (int b = 0; b < g.num_vertices(); ++b) {
            std::vector<bool> seen(g.num_vertices(), false);
            seen[a] = true;
            double best = std::numeric_limits<double>::infinity();
            all_simple_paths(a, b, 0.0, adj, seen, best);
            EXPECT_NEAR(geodesic_distance(g, a, b), best, 1e-12) << a << " " << b;
        }
    }
}

TEST(Geodesic, MatchesFloydWarshallOnFullGrid) {
    const TriMesh g = all_area(primitives::grid(10, 10, 1.0));
    const auto d = floyd_warshall(g);
    EXPECT_NEAR(geodesic_distance(g, 0, 120), d[0][120], 1e-12);
    std::mt19937 rng(4);
    std::uniform_int_distribution<int> pick(0, g.num_vertices() - 1);
    for (int i = 0; i < 50; ++i) {
        const int a = pick(rng);
        const int b = pick(rng);
        EXPECT_NEAR(geodesic_distance(g, a, b), d[a][b], 1e-12);
    }
}

TEST(Geodesic, MetricProperties) {
    const TriMesh m = all_area(primitives::uv_sphere(1.0, 12, 8));
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> pick(0, m.num_vertices() - 1);
    for (int i = 0; i < 40; ++i) {
        const int a = pick(rng);
        const int b = pick(rng);
        const int c = pick(rng);
        const double ab = geodesic_distance(m, a, b);
        EXPECT_NEAR(ab, geodesic_distance(m, b, a), 1e-12);
        EXPECT_LE(ab, geodesic_distance(m, a, c) + geodesic_distance(m, c, b) + 1e-12);
        EXPECT_GE(ab, (m.vertex(a) - m.vertex(b)).norm() - 1e-12);
    }
}

TEST(Geodesic, Errors) {
    const TriMesh g = testing::grid_with_area();
    EXPECT_THROW(geodesic_distance(g, 0, 8), StateError);
    const TriMesh two = all_area(primitives::merge(primitives::grid(1, 1), primitives::unit_cube()));
    EXPECT_FALSE(uv_area_connected(two));
    EXPECT_THROW(geodesic_distance(two, 0, 5), TopologyError);
}

TEST(Region, SaveLoadRoundTrip) {
    TempDir dir;
    const TriMesh m = select_region(primitives::uv_sphere(1.0, 10, 6), 3, 17);
    save_region(m, dir / "r.txt");
    const TriMesh plain = primitives::uv_sphere(1.0, 10, 6);
    EXPECT_EQ(load_region(plain, dir / "r.txt").uv_area_flags(), m.uv_area_flags());

    std::ofstream(dir / "bad.txt") << "0\nx\n";
    try {
        load_region(plain, dir / "bad.txt");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
    }
    std::ofstream(dir / "split.txt") << "0\n" << plain.num_faces() - 1 << "\n";
    EXPECT_THROW(load_region(plain, dir / "split.txt"), TopologyError);
}

} // namespace
} // namespace decalforge
