// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "decalforge/image.hpp"
#include "decalforge/mesh.hpp"
#include "decalforge/uv_param.hpp"

namespace decalforge {

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over all channels; +inf when the images are equal.
/// With a mask only pixels whose mask value is nonzero count.
double psnr(const RgbImage& a, const RgbImage& b);
double psnr(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>& mask);

struct RvwReport {
    int n_pairs = 0;
    std::uint64_t seed = 0;
    std::vector<double> ratios; // geodesic / UV distance
    double mean = 0.0;
    double variance = 0.0;     // of ratios / mean
    double raw_variance = 0.0; // of ratios as measured
    int resampled = 0;         // pairs redrawn because their UV distance was ~0
};

/// Ratio Variance Warping of a chart over the mesh's UV-area vertices.
RvwReport rvw(const TriMesh& mesh, const UvChart& chart, int n_pairs = 10000, std::uint64_t seed = 1);

std::string to_json(const RvwReport& report);
std::string to_text(const RvwReport& report);

} // namespace decalforge
