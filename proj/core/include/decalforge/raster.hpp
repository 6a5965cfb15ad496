// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "decalforge/camera.hpp"
#include "decalforge/mesh.hpp"

namespace decalforge {

/// First-hit record of one pixel.
struct Fragment {
    int row = 0;
    int col = 0;
    int face = -1;
    Vec3 bary = Vec3::Zero(); // perspective-correct, sums to 1
    double depth = 0.0;       // distance along the camera -Z axis
    Vec3 position = Vec3::Zero();
    Vec3 view_dir = Vec3::Zero(); // unit, camera -> surface
};

class FragmentBuffer {
public:
    FragmentBuffer() = default;
    FragmentBuffer(int width, int height) : width_(width), height_(height), pixels_(std::size_t(width) * height) {}

    int width() const { return width_; }
    int height() const { return height_; }

    const std::optional<Fragment>& at(int row, int col) const { return pixels_[std::size_t(row) * width_ + col]; }
    std::optional<Fragment>& at(int row, int col) { return pixels_[std::size_t(row) * width_ + col]; }
    const std::vector<std::optional<Fragment>>& pixels() const { return pixels_; }

    int covered() const;

    /// Covered fragments in row-major pixel order.
    std::vector<Fragment> fragments() const;

    bool operator==(const FragmentBuffer& other) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::optional<Fragment>> pixels_;
};

struct PixelRect {
    int row0 = 0;
    int col0 = 0;
    int row1 = 0; // exclusive
    int col1 = 0; // exclusive
};

struct RasterOptions {
    /// Restrict coverage to a pixel rectangle.
    std::optional<PixelRect> scissor;
    /// Worker threads; 0 picks the hardware concurrency.
    int threads = 0;
    double near = 1e-4;
};

/// Depth-tested rasterization with pixel-center sampling, the top-left fill
/// rule and no back-face culling. Equal depths resolve to the lower face index.
FragmentBuffer rasterize(const TriMesh& mesh, const Camera& cam, const RasterOptions& options = {});

/// Fragment at a single pixel, or nothing on background.
std::optional<Fragment> rasterize_pixel(const TriMesh& mesh, const Camera& cam, int row, int col);

template <typename T>
T interpolate(const Fragment& frag, const T& a0, const T& a1, const T& a2) {
    return frag.bary[0] * a0 + frag.bary[1] * a1 + frag.bary[2] * a2;
}

/// Interpolated vertex normal of the fragment's face, re-normalized.
Vec3 interpolate_normal(const TriMesh& mesh, const Fragment& frag);

/// Key identifying a (mesh, camera) pair for the on-disk fragment cache.
std::uint64_t fragment_cache_key(const TriMesh& mesh, const Camera& cam);

void save_fragments(const FragmentBuffer& buffer, const std::filesystem::path& path);
FragmentBuffer load_fragments(const std::filesystem::path& path);

/// Loads `dir/<key>.frag` when present, otherwise rasterizes and stores it.
FragmentBuffer rasterize_cached(const TriMesh& mesh, const Camera& cam, const std::filesystem::path& dir);

} // namespace decalforge
