// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "decalforge/mesh.hpp"
#include "decalforge/primitives.hpp"
#include "decalforge/uv_param.hpp"
#include "test_util.hpp"

namespace decalforge {
namespace {

TriMesh all_area(const TriMesh& m) { return m.with_uv_area(std::vector<std::uint8_t>(m.num_faces(), 1)); }

double chart_area(const TriMesh& m, const std::vector<Vec2>& uv) {
    double a = 0.0;
    for (int f = 0; f < m.num_faces(); ++f) {
        if (m.in_uv_area(f)) {
            const Face& t = m.face(f);
            const Vec2 e1 = uv[t[1]] - uv[t[0]];
            const Vec2 e2 = uv[t[2]] - uv[t[0]];
            a += 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
        }
    }
    return a;
}

double surface_area(const TriMesh& m) {
    double a = 0.0;
    for (int f = 0; f < m.num_faces(); ++f) {
        if (m.in_uv_area(f)) {
            a += m.face_area(f);
        }
    }
    return a;
}

// Singular values of the 3D -> UV map of one triangle, from edge vectors.
Vec2 singular_values(const TriMesh& m, const std::vector<Vec2>& uv, int f) {
    const Face& t = m.face(f);
    const Vec3 e1 = m.vertex(t[1]) - m.vertex(t[0]);
    const Vec3 e2 = m.vertex(t[2]) - m.vertex(t[0]);
    const Vec3 x = e1.normalized();
    const Vec3 y = (e2 - e2.dot(x) * x).normalized();
    Eigen::Matrix2d p;
    p << e1.dot(x), e2.dot(x), e1.dot(y), e2.dot(y);
    Eigen::Matrix2d q;
    q.col(0) = uv[t[1]] - uv[t[0]];
    q.col(1) = uv[t[2]] - uv[t[0]];
    return Eigen::JacobiSVD<Eigen::Matrix2d>(q * p.inverse()).singularValues();
}

TEST(Tutte, SingleTriangle) {
    const TriMesh tri = all_area(TriMesh::from_arrays({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}}, {{0, 1, 2}}));
    const UvChart c = tutte_embed(tri);
    for (const Vec2& uv : c.vertex_uv) {
        EXPECT_GE(uv.minCoeff(), c.margin - 1e-12);
        EXPECT_LE(uv.maxCoeff(), 1.0 - c.margin + 1e-12);
    }
    EXPECT_GT(chart_area(tri, c.vertex_uv), 0.0);
}

TEST(Tutte, InteriorInsideBoundaryHull) {
    const TriMesh g = all_area(primitives::grid(3, 3, 1.0));
    const UvChart c = tutte_embed(g);
    std::vector<Vec2> boundary;
    for (int j = 0; j <= 3; ++j) {
        for (int i = 0; i <= 3; ++i) {
            if (i == 0 || j == 0 || i == 3 || j == 3) {
                boundary.push_back(c.vertex_uv[j * 4 + i]);
            }
        }
    }
    // Boundary vertices lie on a circle: the hull of all of them contains its center disk.
    Vec2 center = Vec2::Zero();
    for (const Vec2& b : boundary) {
        center += b;
    }
    center /= boundary.size();
    double rmin = 1e9;
    double rmax = 0.0;
    for (const Vec2& b : boundary) {
        rmin = std::min(rmin, (b - center).norm());
        rmax = std::max(rmax, (b - center).norm());
    }
    EXPECT_NEAR(rmin, rmax, 1e-9);
    for (int v : {5, 6, 9, 10}) {
        EXPECT_LT((c.vertex_uv[v] - center).norm(), rmin * std::cos(kPi / boundary.size()));
    }
    EXPECT_EQ(count_uv_overlaps(g, c), 0);
}

TEST(Tutte, RejectsNonDisks) {
    EXPECT_THROW(tutte_embed(all_area(primitives::unit_cube())), TopologyError);
    EXPECT_THROW(tutte_embed(all_area(primitives::uv_sphere(1.0, 8, 6))), TopologyError);
    EXPECT_THROW(tutte_embed(primitives::grid(2, 2)), StateError);
    // Annulus: two boundary loops.
    std::vector<std::uint8_t> ring(18, 1);
    ring[8] = ring[9] = 0;
    EXPECT_THROW(tutte_embed(primitives::grid(3, 3).with_uv_area(ring)), TopologyError);
}

TEST(Arap, FlatPatchIsExact) {
    const TriMesh g = all_area(primitives::grid(5, 4, 0.3, primitives::Diagonals::Alternating));
    ArapStats stats;
    const UvChart c = parameterize(g, {}, &stats);
    EXPECT_LT(c.arap_energy, 1e-10);
    // Rigid + uniform scale: every pairwise distance ratio is the same.
    const double s = (c.vertex_uv[1] - c.vertex_uv[0]).norm() / (g.vertex(1) - g.vertex(0)).norm();
    for (int a = 0; a < g.num_vertices(); a += 3) {
        for (int b = a + 1; b < g.num_vertices(); b += 2) {
            EXPECT_NEAR((c.vertex_uv[a] - c.vertex_uv[b]).norm(), s * (g.vertex(a) - g.vertex(b)).norm(), 1e-7);
        }
    }
}

TEST(Arap, QuarterCylinderIsIsometricUpToScale) {
    const TriMesh cyl = all_area(primitives::cylinder_patch(1.0, kPi / 2, 1.2, 24, 16));
    const UvChart c = parameterize(cyl);
    double scale = 0.0;
    std::vector<Vec2> sv;
    for (int f = 0; f < cyl.num_faces(); ++f) {
        sv.push_back(singular_values(cyl, c.vertex_uv, f));
        scale += sv.back().sum();
    }
    scale /= 2.0 * sv.size();
    for (const Vec2& s : sv) {
        EXPECT_NEAR(s[0] / scale, 1.0, 1e-3);
        EXPECT_NEAR(s[1] / scale, 1.0, 1e-3);
    }
}

TEST(Arap, HemisphereImprovesOnTutte) {
    const TriMesh cap = all_area(primitives::spherical_cap(1.0, kPi / 2, 24, 8));
    const UvChart init = tutte_embed(cap);
    // Tutte energy at matching total area, computed here.
    std::vector<Vec2> scaled = init.vertex_uv;
    const double k = std::sqrt(surface_area(cap) / chart_area(cap, scaled));
    for (auto& q : scaled) {
        q *= k;
    }
    const double e_init = arap_energy(cap, scaled);
    ArapStats stats;
    const UvChart c = arap_solve(cap, init, {}, &stats);
    EXPECT_NEAR(stats.energy.front(), e_init, 1e-9 * e_init);
    EXPECT_LT(c.arap_energy, e_init);
    for (std::size_t i = 1; i < stats.energy.size(); ++i) {
        EXPECT_LE(stats.energy[i], stats.energy[i - 1] * (1 + 1e-12)) << i;
    }
    EXPECT_EQ(count_uv_overlaps(cap, c), 0);
}

TEST(Arap, EnergyMonotoneOnSeveralPatches) {
    const TriMesh patches[] = {
        all_area(primitives::spherical_cap(1.0, 1.0, 16, 6)),
        all_area(primitives::cylinder_patch(0.7, 2.0, 1.0, 12, 6, primitives::Diagonals::Uniform)),
        select_region(primitives::uv_sphere(1.0, 16, 10), 0, 60),
    };
    for (const TriMesh& m : patches) {
        ArapStats stats;
        const UvChart c = parameterize(m, {}, &stats);
        ASSERT_GE(stats.energy.size(), 2u);
        for (std::size_t i = 1; i < stats.energy.size(); ++i) {
            EXPECT_LE(stats.energy[i], stats.energy[i - 1] * (1 + 1e-12));
        }
        EXPECT_EQ(count_uv_overlaps(m, c), 0);
    }
}

TEST(Chart, SentinelAndMargin) {
    const TriMesh m = testing::grid_with_area();
    ChartOptions opt;
    opt.margin = margin_for_resolution(64);
    EXPECT_DOUBLE_EQ(opt.margin, 2.0 / 63.0);
    const UvChart c = parameterize(m, opt);
    for (int v = 0; v < m.num_vertices(); ++v) {
        if (m.vertex_in_uv_area(v)) {
            EXPECT_GE(c.vertex_uv[v].minCoeff(), opt.margin - 1e-12);
            EXPECT_LE(c.vertex_uv[v].maxCoeff(), 1.0 - opt.margin + 1e-12);
        } else {
            EXPECT_EQ(c.vertex_uv[v], Vec2::Zero());
        }
    }
}

TEST(Chart, ScaleInvariant) {
    // Anisotropic patch, so the principal axes are well defined.
    const TriMesh cap = all_area(primitives::cylinder_patch(1.0, 1.8, 0.7, 16, 6, primitives::Diagonals::Uniform));
    const UvChart a = parameterize(cap);
    const UvChart b = parameterize(cap.scaled(3.7));
    for (int v = 0; v < cap.num_vertices(); ++v) {
        EXPECT_NEAR((a.vertex_uv[v] - b.vertex_uv[v]).norm(), 0.0, 1e-6);
    }
}

TEST(Chart, OverlapCounterDetectsFolds) {
    const TriMesh g = all_area(primitives::grid(2, 2, 1.0));
    UvChart c = parameterize(g);
    EXPECT_EQ(count_uv_overlaps(g, c), 0);
    std::swap(c.vertex_uv[0], c.vertex_uv[8]);
    EXPECT_GT(count_uv_overlaps(g, c), 0);
}

TEST(UvToTexel, Examples) {
    EXPECT_EQ(uv_to_texel(Vec2(0, 0), 1024, 1024), Vec2(0, 0));
    EXPECT_EQ(uv_to_texel(Vec2(1, 1), 1024, 1024), Vec2(1023, 1023));
    EXPECT_EQ(uv_to_texel(Vec2(0.5, 0.5), 3, 3), Vec2(1, 1));
}

TEST(UvToTexel, ClampsAndCounts) {
    const std::uint64_t before = uv_clamp_count();
    EXPECT_EQ(uv_to_texel(Vec2(0.25, 0.5), 5, 9), Vec2(1, 4));
    EXPECT_EQ(uv_clamp_count(), before);
    EXPECT_EQ(uv_to_texel(Vec2(-0.5, 1.5), 5, 9), Vec2(0, 8));
    EXPECT_EQ(uv_clamp_count(), before + 1);
}

} // namespace
} // namespace decalforge
