// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <vector>

#include "decalforge/mesh.hpp"

namespace decalforge {

/// UV coordinates for the UV area of a mesh.
///
/// `vertex_uv` has one entry per mesh vertex. Vertices that do not touch the
/// UV area carry the sentinel (0,0); every other UV lies in
/// [margin, 1 - margin]^2.
struct UvChart {
    std::vector<Vec2> vertex_uv;
    double margin = 0.0;
    /// ARAP energy of the chart before normalization, in squared world units.
    double arap_energy = 0.0;
};

struct ChartOptions {
    double margin = 2.0 / 1023.0;
    int max_iters = 100;
    /// Relative energy decrease below which iteration stops.
    double tol = 1e-6;
};

/// Margin covering `texels` texels of a `resolution`-wide texture.
double margin_for_resolution(int resolution, double texels = 2.0);

struct ArapStats {
    int iterations = 0;
    /// Energy after the initial local step, then after every iteration.
    std::vector<double> energy;
};

/// Tutte embedding of the UV-area faces: the single boundary loop goes to a
/// circle (chord-length spacing), interior vertices solve the uniform Laplace
/// system. Throws TopologyError unless the area is a topological disk.
UvChart tutte_embed(const TriMesh& mesh, const ChartOptions& options = {});

/// Free-boundary local/global ARAP starting from `init`. The result is rigidly
/// aligned to its principal axes and uniformly scaled into the unit square
/// with the configured margin.
UvChart arap_solve(const TriMesh& mesh, const UvChart& init, const ChartOptions& options = {},
                   ArapStats* stats = nullptr);

/// tutte_embed followed by arap_solve.
UvChart parameterize(const TriMesh& mesh, const ChartOptions& options = {}, ArapStats* stats = nullptr);

/// ARAP energy sum_t area_t * |J_t - R_t|_F^2 of the chart's UV-area faces, with
/// R_t the closest rotation to each Jacobian J_t.
double arap_energy(const TriMesh& mesh, const std::vector<Vec2>& vertex_uv);

/// Number of UV-area triangle pairs whose interiors overlap in UV space.
int count_uv_overlaps(const TriMesh& mesh, const UvChart& chart);

/// Continuous texel coordinate (u (W-1), v (H-1)). Out-of-range UVs are
/// clamped and counted in uv_clamp_count().
Vec2 uv_to_texel(const Vec2& uv, int width, int height);
std::uint64_t uv_clamp_count();

} // namespace decalforge
