// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "decalforge/types.hpp"

namespace decalforge {

/// Linear floating-point RGB image, row-major, row 0 at the top.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, const Vec3& fill = Vec3::Zero()) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    Vec3& at(int row, int col) { return pixels[std::size_t(row) * width + col]; }
    const Vec3& at(int row, int col) const { return pixels[std::size_t(row) * width + col]; }
    bool empty() const { return pixels.empty(); }
};

/// 8-bit RGBA bitmap as stored in PNG files.
struct Rgba8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // 4 bytes per pixel

    Rgba8Image() = default;
    Rgba8Image(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 4, 0) {}

    std::uint8_t* px(int row, int col) { return &data[(std::size_t(row) * width + col) * 4]; }
    const std::uint8_t* px(int row, int col) const { return &data[(std::size_t(row) * width + col) * 4]; }
};

double srgb_to_linear(double c);
double linear_to_srgb(double c);

Rgba8Image decode_png(const std::string& bytes);
std::string encode_png(const Rgba8Image& image);
Rgba8Image read_png(const std::filesystem::path& path);
void write_png(const Rgba8Image& image, const std::filesystem::path& path);

/// sRGB bitmap to linear RGB composited over black by alpha.
RgbImage to_linear(const Rgba8Image& image);

/// Linear RGB to an opaque sRGB bitmap after multiplying by `exposure`.
Rgba8Image to_srgb8(const RgbImage& image, double exposure = 1.0);

/// Radiance RGBE (.hdr) files, run-length encoded scanlines accepted on read.
RgbImage read_hdr(const std::filesystem::path& path);
void write_hdr(const RgbImage& image, const std::filesystem::path& path);

double mean_squared_error(const RgbImage& a, const RgbImage& b);

} // namespace decalforge
