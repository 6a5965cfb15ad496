// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/primitives.hpp"

#include <cmath>

namespace decalforge::primitives {

namespace {

void push_quad(std::vector<Face>& faces, int a, int b, int c, int d, bool flip) {
    // a-b-c-d counter-clockwise
    if (!flip) {
        faces.push_back({a, b, c});
        faces.push_back({a, c, d});
    } else {
        faces.push_back({a, b, d});
        faces.push_back({b, c, d});
    }
}

} // namespace

TriMesh grid(int cells_x, int cells_y, double spacing, Diagonals diag) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    const int nx = cells_x + 1;
    for (int j = 0; j <= cells_y; ++j) {
        for (int i = 0; i <= cells_x; ++i) {
            v.emplace_back(i * spacing, j * spacing, 0.0);
        }
    }
    for (int j = 0; j < cells_y; ++j) {
        for (int i = 0; i < cells_x; ++i) {
            const int a = j * nx + i;
            const bool flip = diag == Diagonals::Alternating && ((i + j) % 2 == 1);
            push_quad(f, a, a + 1, a + nx + 1, a + nx, flip);
        }
    }
    return TriMesh::from_arrays(std::move(v), std::move(f));
}

TriMesh unit_cube() {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                           {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    std::vector<Face> f = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                           {2, 3, 7}, {2, 7, 6}, {1, 2, 6}, {1, 6, 5}, {0, 4, 7}, {0, 7, 3}};
    return TriMesh::from_arrays(std::move(v), std::move(f));
}

TriMesh cylinder_patch(double radius, double angle, double height, int segments, int rings,
                       Diagonals diag) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    const int nx = segments + 1;
    for (int j = 0; j <= rings; ++j) {
        const double y = height * j / rings;
        for (int i = 0; i <= segments; ++i) {
            const double phi = angle * i / segments;
            v.emplace_back(radius * std::sin(phi), y, radius * std::cos(phi));
        }
    }
    for (int j = 0; j < rings; ++j) {
        for (int i = 0; i < segments; ++i) {
            const int a = j * nx + i;
            const bool flip = diag == Diagonals::Alternating && ((i + j) % 2 == 1);
            // Outward normals: walking +phi then +y is counter-clockwise seen from outside.
            push_quad(f, a, a + 1, a + nx + 1, a + nx, flip);
        }
    }
    return TriMesh::from_arrays(std::move(v), std::move(f));
}

TriMesh uv_sphere(double radius, int segments, int rings, const Vec3& center) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    v.push_back(center + Vec3(0, radius, 0));
    for (int j = 1; j < rings; ++j) {
        const double theta = kPi * j / rings;
        for (int i = 0; i < segments; ++i) {
            const double phi = 2.0 * kPi * i / segments;
            v.push_back(center + radius * Vec3(std::sin(theta) * std::sin(phi), std::cos(theta),
                                               std::sin(theta) * std::cos(phi)));
        }
    }
    v.push_back(center + Vec3(0, -radius, 0));
    const int south = static_cast<int>(v.size()) - 1;
    auto ring_vertex = [&](int ring, int i) { return 1 + (ring - 1) * segments + (i % segments); };
    for (int i = 0; i < segments; ++i) {
        f.push_back({0, ring_vertex(1, i), ring_vertex(1, i + 1)});
    }
    for (int j = 1; j < rings - 1; ++j) {
        for (int i = 0; i < segments; ++i) {
            const int a = ring_vertex(j, i);
            const int b = ring_vertex(j + 1, i);
            const int c = ring_vertex(j + 1, i + 1);
            const int d = ring_vertex(j, i + 1);
            f.push_back({a, b, c});
            f.push_back({a, c, d});
        }
    }
    for (int i = 0; i < segments; ++i) {
        f.push_back({south, ring_vertex(rings - 1, i + 1), ring_vertex(rings - 1, i)});
    }
    return TriMesh::from_arrays(std::move(v), std::move(f));
}

TriMesh spherical_cap(double radius, double half_angle, int segments, int rings) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    v.emplace_back(0, radius, 0);
    for (int j = 1; j <= rings; ++j) {
        const double theta = half_angle * j / rings;
        for (int i = 0; i < segments; ++i) {
            const double phi = 2.0 * kPi * i / segments;
            v.push_back(radius * Vec3(std::sin(theta) * std::sin(phi), std::cos(theta),
                                      std::sin(theta) * std::cos(phi)));
        }
    }
    auto ring_vertex = [&](int ring, int i) { return 1 + (ring - 1) * segments + (i % segments); };
    for (int i = 0; i < segments; ++i) {
        f.push_back({0, ring_vertex(1, i), ring_vertex(1, i + 1)});
    }
    for (int j = 1; j < rings; ++j) {
        for (int i = 0; i < segments; ++i) {
            const int a = ring_vertex(j, i);
            const int b = ring_vertex(j + 1, i);
            const int c = ring_vertex(j + 1, i + 1);
            const int d = ring_vertex(j, i + 1);
            f.push_back({a, b, c});
            f.push_back({a, c, d});
        }
    }
    return TriMesh::from_arrays(std::move(v), std::move(f));
}

TriMesh ground_plane(double size, double height, int cells) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    const int n = cells + 1;
    for (int j = 0; j <= cells; ++j) {
        for (int i = 0; i <= cells; ++i) {
            v.emplace_back(-0.5 * size + size * i / cells, height, -0.5 * size + size * j / cells);
        }
    }
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < cells; ++i) {
            const int a = j * n + i;
            // (x, z) grid seen from +Y: a -> a+n -> a+n+1 -> a+1 is counter-clockwise.
            push_quad(f, a, a + n, a + n + 1, a + 1, (i + j) % 2 == 1);
        }
    }
    return TriMesh::from_arrays(std::move(v), std::move(f));
}

TriMesh merge(const TriMesh& a, const TriMesh& b) {
    std::vector<Vec3> v = a.vertices();
    v.insert(v.end(), b.vertices().begin(), b.vertices().end());
    std::vector<Vec3> n = a.vertex_normals();
    n.insert(n.end(), b.vertex_normals().begin(), b.vertex_normals().end());
    std::vector<Face> f = a.faces();
    const int offset = a.num_vertices();
    for (auto t : b.faces()) {
        for (int& idx : t) {
            idx += offset;
        }
        f.push_back(t);
    }
    std::vector<std::uint8_t> flags = a.uv_area_flags();
    flags.insert(flags.end(), b.uv_area_flags().begin(), b.uv_area_flags().end());
    return TriMesh::from_arrays(std::move(v), std::move(f), std::move(n)).with_uv_area(std::move(flags));
}

} // namespace decalforge::primitives
