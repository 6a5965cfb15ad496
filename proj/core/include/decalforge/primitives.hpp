// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "decalforge/mesh.hpp"

namespace decalforge::primitives {

enum class Diagonals {
    Uniform,     // every quad split along the same diagonal
    Alternating, // split direction flips in a checkerboard pattern
};

/// Planar grid in the z = 0 plane with `cells_x` x `cells_y` quads of size
/// `spacing`, lower-left corner at the origin. Vertex (i, j) has index
/// j * (cells_x + 1) + i.
TriMesh grid(int cells_x, int cells_y, double spacing = 1.0, Diagonals diag = Diagonals::Uniform);

/// Axis-aligned unit cube [0,1]^3, 8 vertices and 12 triangles.
TriMesh unit_cube();

/// Cylindrical shell of the given radius spanning `angle` radians around +Y
/// and `height` along +Y.
TriMesh cylinder_patch(double radius, double angle, double height, int segments, int rings,
                       Diagonals diag = Diagonals::Alternating);

/// Latitude/longitude sphere with poles on +-Y. Faces are ordered from the
/// north (+Y) pole downwards, so a flood fill seeded at face 0 grows in rings.
TriMesh uv_sphere(double radius, int segments, int rings, const Vec3& center = Vec3::Zero());

/// Spherical cap of the given polar half-angle around +Y.
TriMesh spherical_cap(double radius, double half_angle, int segments, int rings);

/// Square of side `size` in the y = `height` plane, facing +Y.
TriMesh ground_plane(double size, double height, int cells);

/// Concatenates meshes; face order follows argument order.
TriMesh merge(const TriMesh& a, const TriMesh& b);

} // namespace decalforge::primitives
