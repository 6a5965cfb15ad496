// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "decalforge/image.hpp"

namespace decalforge {

inline constexpr double kRoughnessMin = 0.01;

/// Equirectangular mapping: u = atan2(x, -z) / 2pi + 1/2, v = acos(y) / pi.
Vec2 direction_to_equirect(const Vec3& dir);
Vec3 equirect_to_direction(double u, double v);

/// Direction through the center of texel (row, col) of a width x height map.
Vec3 texel_direction(int width, int height, int row, int col);

/// Bilinear footprint on an equirect map: wraps in u, clamps in v.
struct BilinearTaps {
    int index[4];
    double weight[4];
};
BilinearTaps equirect_taps(int width, int height, const Vec3& dir);
/// Bilinear sample; `d_dir` receives d(value_c)/d(dir_j).
Vec3 sample_equirect(const RgbImage& map, const Vec3& dir, Mat3* d_dir = nullptr);

/// Direction used to read the prefiltered map: the mirror direction r pulled
/// toward the normal as roughness grows, t = (1 - a)(sqrt(1 - a) + a) with
/// a = rho^2.
Vec3 specular_direction(const Vec3& n, const Vec3& r, double rho, Vec3* d_rho = nullptr);

/// GGX normal distribution with alpha = rho^2; rho is clamped to kRoughnessMin.
double ggx_D(double n_dot_h, double rho);

/// Schlick Fresnel.
double fresnel_schlick(double cos_theta, double f0);
Vec3 fresnel_schlick(double cos_theta, const Vec3& f0);

/// Smith masking-shadowing with the Schlick-GGX approximation (k = alpha / 2).
double smith_G(double n_dot_v, double n_dot_l, double rho);

/// i-th point of the N-point Hammersley set in [0,1)^2.
Vec2 hammersley(std::uint32_t i, std::uint32_t n);

/// GGX half vector around +Z for a (xi1, xi2) sample, distributed as D (n.h).
Vec3 sample_ggx_half(const Vec2& xi, double rho);

/// Orthonormal frame with `n` as the third column.
Mat3 tangent_frame(const Vec3& n);

/// Split-sum BRDF table over (n.v, rho): F1 scales f0, F2 is the constant term.
class BrdfLut {
public:
    static BrdfLut bake(int resolution = 64, int samples = 1024);

    int resolution() const { return res_; }
    /// Entry at cell (i over n.v, j over rho).
    Vec2 cell(int i, int j) const { return table_[std::size_t(j) * res_ + i]; }
    const std::vector<Vec2>& table() const { return table_; }

    /// Bilinear lookup with clamping. Optional derivative with respect to rho.
    Vec2 lookup(double n_dot_v, double rho, Vec2* d_rho = nullptr) const;

    static BrdfLut from_table(int resolution, std::vector<Vec2> table);

    /// Monte-Carlo (F1, F2) at one point.
    static Vec2 integrate(double n_dot_v, double rho, int samples);

private:
    int res_ = 0;
    std::vector<Vec2> table_;
};

/// Prefiltering as a fixed linear map from base radiance texels to the texels
/// of each mip level. Level k covers roughness k / (levels - 1); level 0 is
/// the identity and each further level halves the resolution.
class PrefilterOperator {
public:
    using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    static PrefilterOperator build(int width, int height, int levels, int samples_per_texel,
                                   std::uint64_t seed = 7);

    int levels() const { return levels_; }
    int samples_per_texel() const { return spp_; }
    int level_width(int k) const { return widths_[k]; }
    int level_height(int k) const { return heights_[k]; }
    const Sparse& matrix(int k) const { return mats_[k]; }

    /// Mip chain of a base radiance map.
    std::vector<RgbImage> apply(const RgbImage& base) const;

    /// Adds the base-texel gradient implied by per-level gradients.
    void apply_transpose(const std::vector<RgbImage>& level_grads, RgbImage& base_grad) const;

private:
    int levels_ = 0;
    int spp_ = 0;
    std::vector<int> widths_;
    std::vector<int> heights_;
    std::vector<Sparse> mats_; // index 0 unused
};

/// Learnable equirect environment with cached mip chain and LUT.
class EnvLight {
public:
    EnvLight() = default;
    EnvLight(int width, int height, double radiance);

    static EnvLight from_radiance(const RgbImage& radiance);

    int width() const { return raw_.width; }
    int height() const { return raw_.height; }

    RgbImage& raw() { return raw_; }
    const RgbImage& raw() const { return raw_; }
    RgbImage radiance() const;

    /// Re-prefilters the mip chain from the current raw texels.
    void prefilter(std::shared_ptr<const PrefilterOperator> op);
    void set_lut(std::shared_ptr<const BrdfLut> lut) { lut_ = std::move(lut); }

    /// Installs previously baked mips (checkpoint load). Gradients need prefilter().
    void restore(std::vector<RgbImage> mips, std::shared_ptr<const BrdfLut> lut);

    bool baked() const { return lut_ && !mips_.empty(); }
    const std::vector<RgbImage>& mips() const { return mips_; }
    const BrdfLut& lut() const { return *lut_; }
    std::shared_ptr<const BrdfLut> lut_ptr() const { return lut_; }
    std::shared_ptr<const PrefilterOperator> op_ptr() const { return op_; }
    int levels() const { return static_cast<int>(mips_.size()); }

    /// Trilinear prefiltered radiance in direction `dir` at roughness rho.
    Vec3 specular_radiance(const Vec3& dir, double rho, Vec3* d_rho = nullptr, Mat3* d_dir = nullptr) const;

    /// Accumulates grad into per-level mip gradients for a lookup at (dir, rho).
    void specular_radiance_backward(const Vec3& dir, double rho, const Vec3& grad,
                                    std::vector<RgbImage>& mip_grads) const;

    /// Gradient on raw texels given per-level mip gradients.
    RgbImage raw_gradient(const std::vector<RgbImage>& mip_grads) const;

    std::vector<RgbImage> zero_mip_grads() const;

private:
    RgbImage raw_;
    std::vector<RgbImage> mips_;
    std::shared_ptr<const PrefilterOperator> op_;
    std::shared_ptr<const BrdfLut> lut_;
};

/// Split-sum specular: prefiltered radiance along specular_direction times
/// (f0 F1 + F2).
Vec3 split_sum_specular(const EnvLight& env, const Vec3& n, const Vec3& w_o, double rho, const Vec3& f0);

struct McEstimate {
    Vec3 mean = Vec3::Zero();
    Vec3 std_error = Vec3::Zero();
};

/// Monte-Carlo estimate of the unsplit specular integral with GGX importance
/// sampling against an arbitrary radiance function.
McEstimate reference_specular(const std::function<Vec3(const Vec3&)>& radiance, const Vec3& n, const Vec3& w_o,
                              double rho, const Vec3& f0, int samples, std::uint64_t seed = 1);
McEstimate reference_specular(const EnvLight& env, const Vec3& n, const Vec3& w_o, double rho, const Vec3& f0,
                              int samples, std::uint64_t seed = 1);

} // namespace decalforge
