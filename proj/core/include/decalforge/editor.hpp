// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "decalforge/scene.hpp"

namespace decalforge {

using Quad = std::array<Vec2, 4>;

/// Decal image plus the UV quad it lands on. Anchor k receives decal
/// corner k: top-left, top-right, bottom-right, bottom-left.
struct DecalSpec {
    Rgba8Image image;
    Quad anchors{};
    std::optional<double> roughness_override;
};

/// Projective map from the unit square to a quad.
class Homography {
public:
    static Homography square_to_quad(const Quad& quad);

    Vec2 map(const Vec2& st) const;
    /// Quad point back to unit-square coordinates.
    Vec2 unmap(const Vec2& uv) const;
    const Mat3& matrix() const { return h_; }

private:
    Mat3 h_ = Mat3::Identity();
    Mat3 inv_ = Mat3::Identity();
};

/// Throws GeometryError unless the anchors lie in [0,1]^2 and form a
/// strictly convex quad (either winding).
void validate_quad(const Quad& quad);

/// Row-major indices of texels whose grid UV (col/(W-1), row/(H-1)) lies in the quad.
std::vector<int> texels_in_quad(const Quad& quad, int width, int height);

/// Vertices of the UV area whose chart UV lies in the quad.
std::vector<int> vertices_in_quad(const Scene& scene, const Quad& quad);

struct EditReceipt {
    int id = 0;
    int texels = 0;   // texels written
    int vertices = 0; // roughness overrides written or cleared
};

/// Alpha-composites the decal (premultiplied linear, bilinear) over the
/// baked texture inside the quad and swaps in the new texture. No optimizer
/// state is touched.
EditReceipt apply_decal(Scene& scene, const DecalSpec& spec);

/// Overrides the activated roughness of the vertices inside the quad.
EditReceipt set_region_roughness(Scene& scene, const Quad& anchors, double value);

/// Recomputes in-quad texels from F_t and clears in-quad roughness overrides.
EditReceipt revert_region(Scene& scene, const Quad& anchors);

/// Reverts the quad of a previous decal or roughness edit.
EditReceipt revert_edit(Scene& scene, int edit_id);

/// Re-applies an edit log in order (ids are taken from the records).
void replay_edits(Scene& scene, const std::vector<EditRecord>& log);

} // namespace decalforge
