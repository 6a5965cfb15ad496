// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/ibl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <random>

#include <fmt/format.h>

#include "decalforge/parallel.hpp"

namespace decalforge {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double alpha_of(double rho) {
    const double r = std::max(rho, kRoughnessMin);
    return r * r;
}

Vec3 reflect(const Vec3& w, const Vec3& n) { return 2.0 * w.dot(n) * n - w; }

} // namespace

Vec2 direction_to_equirect(const Vec3& dir) {
    const Vec3 d = dir.normalized();
    const double u = std::atan2(d.x(), -d.z()) / (2.0 * kPi) + 0.5;
    const double v = std::acos(std::clamp(d.y(), -1.0, 1.0)) / kPi;
    return Vec2(u, v);
}

Vec3 equirect_to_direction(double u, double v) {
    const double phi = (u - 0.5) * 2.0 * kPi;
    const double theta = v * kPi;
    return Vec3(std::sin(theta) * std::sin(phi), std::cos(theta), -std::sin(theta) * std::cos(phi));
}

Vec3 texel_direction(int width, int height, int row, int col) {
    return equirect_to_direction((col + 0.5) / width, (row + 0.5) / height);
}

BilinearTaps equirect_taps(int width, int height, const Vec3& dir) {
    const Vec2 uv = direction_to_equirect(dir);
    BilinearTaps t;
    if (!uv.allFinite()) {
        // Non-finite directions read texel 0 with NaN weights so the NaN propagates.
        for (int k = 0; k < 4; ++k) {
            t.index[k] = 0;
            t.weight[k] = std::numeric_limits<double>::quiet_NaN();
        }
        return t;
    }
    const double x = uv.x() * width - 0.5;
    const double y = std::clamp(uv.y() * height - 0.5, 0.0, double(height - 1));
    const double xf = std::floor(x);
    const int y0 = std::min(static_cast<int>(y), height - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = x - xf;
    const double fy = y - y0;
    int x0 = static_cast<int>(xf) % width;
    if (x0 < 0) {
        x0 += width;
    }
    const int x1 = (x0 + 1) % width;
    t.index[0] = y0 * width + x0;
    t.index[1] = y0 * width + x1;
    t.index[2] = y1 * width + x0;
    t.index[3] = y1 * width + x1;
    t.weight[0] = (1 - fx) * (1 - fy);
    t.weight[1] = fx * (1 - fy);
    t.weight[2] = (1 - fx) * fy;
    t.weight[3] = fx * fy;
    return t;
}

namespace {

/// Lower mip level and blend weight for a roughness; NaN roughness yields a NaN weight.
std::pair<int, double> level_split(double rho, int levels) {
    if (std::isnan(rho)) {
        return {0, rho};
    }
    const double t = std::clamp(rho, 0.0, 1.0) * (levels - 1);
    const int k0 = std::min(static_cast<int>(t), levels - 2);
    return {k0, t - k0};
}

} // namespace

Vec3 sample_equirect(const RgbImage& map, const Vec3& dir, Mat3* d_dir) {
    const auto t = equirect_taps(map.width, map.height, dir);
    const Vec3* c[4];
    for (int k = 0; k < 4; ++k) {
        c[k] = &map.pixels[t.index[k]];
    }
    const Vec3 value = t.weight[0] * *c[0] + t.weight[1] * *c[1] + t.weight[2] * *c[2] + t.weight[3] * *c[3];
    if (d_dir) {
        // Recover the fractional offsets from the weights.
        const double fx = t.weight[1] + t.weight[3];
        const double fy = t.weight[2] + t.weight[3];
        const Vec3 d_px = (1 - fy) * (*c[1] - *c[0]) + fy * (*c[3] - *c[2]);
        Vec3 d_py = (1 - fx) * (*c[2] - *c[0]) + fx * (*c[3] - *c[1]);
        const double len = dir.norm();
        const Vec3 d = dir / len;
        const double rxz = d.x() * d.x() + d.z() * d.z();
        Vec3 du = Vec3::Zero();
        Vec3 dv = Vec3::Zero();
        if (rxz > 1e-24) {
            du = Vec3(-d.z(), 0.0, d.x()) / (2.0 * kPi * rxz * len);
            const Vec3 dy_ddir = (Vec3::UnitY() - d.y() * d) / len;
            dv = -dy_ddir / (kPi * std::sqrt(rxz));
        }
        const double y = Vec2(direction_to_equirect(dir)).y() * map.height - 0.5;
        if (y < 0.0 || y > map.height - 1) {
            d_py.setZero();
        }
        *d_dir = d_px * (map.width * du.transpose()) + d_py * (map.height * dv.transpose());
    }
    return value;
}

Vec3 specular_direction(const Vec3& n, const Vec3& r, double rho, Vec3* d_rho) {
    const double a = rho * rho;
    const double s = std::max(1.0 - a, 0.0);
    const double t = s * (std::sqrt(s) + a);
    const Vec3 q = n + t * (r - n);
    const double len = q.norm();
    const Vec3 dir = q / len;
    if (d_rho) {
        const double dt_da = -1.5 * std::sqrt(s) + 1.0 - 2.0 * a;
        const Vec3 dq = (r - n) * (dt_da * 2.0 * rho);
        *d_rho = (dq - dir * dir.dot(dq)) / len;
    }
    return dir;
}

double ggx_D(double n_dot_h, double rho) {
    const double a = alpha_of(rho);
    const double a2 = a * a;
    const double d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

double fresnel_schlick(double cos_theta, double f0) {
    const double m = std::clamp(1.0 - cos_theta, 0.0, 1.0);
    const double m2 = m * m;
    return f0 + (1.0 - f0) * m2 * m2 * m;
}

Vec3 fresnel_schlick(double cos_theta, const Vec3& f0) {
    return Vec3(fresnel_schlick(cos_theta, f0.x()), fresnel_schlick(cos_theta, f0.y()),
                fresnel_schlick(cos_theta, f0.z()));
}

double smith_G(double n_dot_v, double n_dot_l, double rho) {
    const double k = 0.5 * alpha_of(rho);
    const double gv = n_dot_v / (n_dot_v * (1.0 - k) + k);
    const double gl = n_dot_l / (n_dot_l * (1.0 - k) + k);
    return gv * gl;
}

Vec2 hammersley(std::uint32_t i, std::uint32_t n) {
    std::uint32_t b = i;
    b = (b << 16u) | (b >> 16u);
    b = ((b & 0x55555555u) << 1u) | ((b & 0xAAAAAAAAu) >> 1u);
    b = ((b & 0x33333333u) << 2u) | ((b & 0xCCCCCCCCu) >> 2u);
    b = ((b & 0x0F0F0F0Fu) << 4u) | ((b & 0xF0F0F0F0u) >> 4u);
    b = ((b & 0x00FF00FFu) << 8u) | ((b & 0xFF00FF00u) >> 8u);
    return Vec2(static_cast<double>(i) / n, static_cast<double>(b) * 2.3283064365386963e-10);
}

Vec3 sample_ggx_half(const Vec2& xi, double rho) {
    const double a = alpha_of(rho);
    const double phi = 2.0 * kPi * xi.y();
    const double cos_t = std::sqrt((1.0 - xi.x()) / (1.0 + (a * a - 1.0) * xi.x()));
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    return Vec3(sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t);
}

Mat3 tangent_frame(const Vec3& n) {
    const Vec3 up = std::abs(n.z()) < 0.999 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    const Vec3 t = up.cross(n).normalized();
    const Vec3 b = n.cross(t);
    Mat3 m;
    m.col(0) = t;
    m.col(1) = b;
    m.col(2) = n;
    return m;
}

// ---------------------------------------------------------------------------
// BRDF table

Vec2 BrdfLut::integrate(double n_dot_v, double rho, int samples) {
    const Vec3 v(std::sqrt(std::max(0.0, 1.0 - n_dot_v * n_dot_v)), 0.0, n_dot_v);
    double f1 = 0.0;
    double f2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Vec3 h = sample_ggx_half(hammersley(i, samples), rho);
        const Vec3 l = reflect(v, h);
        const double nol = l.z();
        if (nol <= 0.0) {
            continue;
        }
        const double noh = std::max(h.z(), 1e-12);
        const double voh = std::clamp(v.dot(h), 0.0, 1.0);
        const double g_vis = smith_G(n_dot_v, nol, rho) * voh / (noh * n_dot_v);
        const double m = 1.0 - voh;
        const double fc = m * m * m * m * m;
        f1 += (1.0 - fc) * g_vis;
        f2 += fc * g_vis;
    }
    return Vec2(f1, f2) / samples;
}

BrdfLut BrdfLut::bake(int resolution, int samples) {
    if (resolution < 16) {
        throw Error("LUT resolution must be at least 16");
    }
    BrdfLut lut;
    lut.res_ = resolution;
    lut.table_.assign(std::size_t(resolution) * resolution, Vec2::Zero());
    parallel_for(0, resolution, [&](int j) {
        const double rho = (j + 0.5) / resolution;
        for (int i = 0; i < resolution; ++i) {
            lut.table_[std::size_t(j) * resolution + i] = integrate((i + 0.5) / resolution, rho, samples);
        }
    });
    return lut;
}

BrdfLut BrdfLut::from_table(int resolution, std::vector<Vec2> table) {
    if (resolution < 1 || table.size() != std::size_t(resolution) * resolution) {
        throw Error("LUT table size does not match its resolution");
    }
    BrdfLut lut;
    lut.res_ = resolution;
    lut.table_ = std::move(table);
    return lut;
}

Vec2 BrdfLut::lookup(double n_dot_v, double rho, Vec2* d_rho) const {
    if (std::isnan(n_dot_v) || std::isnan(rho)) {
        if (d_rho) {
            *d_rho = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
        }
        return Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
    }
    const double x = std::clamp(n_dot_v * res_ - 0.5, 0.0, double(res_ - 1));
    const double yr = rho * res_ - 0.5;
    const double y = std::clamp(yr, 0.0, double(res_ - 1));
    const int x0 = std::min(static_cast<int>(x), res_ - 2);
    const int y0 = std::min(static_cast<int>(y), res_ - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    const Vec2 a = (1 - fx) * cell(x0, y0) + fx * cell(x0 + 1, y0);
    const Vec2 b = (1 - fx) * cell(x0, y0 + 1) + fx * cell(x0 + 1, y0 + 1);
    if (d_rho) {
        *d_rho = (yr > 0.0 && yr < res_ - 1) ? Vec2((b - a) * res_) : Vec2::Zero();
    }
    return (1 - fy) * a + fy * b;
}

// ---------------------------------------------------------------------------
// Prefiltering

PrefilterOperator PrefilterOperator::build(int width, int height, int levels, int samples_per_texel,
                                           std::uint64_t seed) {
    if (levels < 2) {
        throw Error("prefilter needs at least 2 levels");
    }
    if (samples_per_texel < 1) {
        throw Error("prefilter needs at least one sample per texel");
    }
    PrefilterOperator op;
    op.levels_ = levels;
    op.spp_ = samples_per_texel;
    op.widths_.resize(levels);
    op.heights_.resize(levels);
    op.mats_.resize(levels);
    op.widths_[0] = width;
    op.heights_[0] = height;
    for (int k = 1; k < levels; ++k) {
        op.widths_[k] = std::max(width >> k, std::min(width, 8));
        op.heights_[k] = std::max(height >> k, std::min(height, 4));
        const int w = op.widths_[k];
        const int h = op.heights_[k];
        const double rho = static_cast<double>(k) / (levels - 1);
        const int n_rows = w * h;
        std::vector<std::vector<Eigen::Triplet<double>>> rows(n_rows);
        parallel_for(0, n_rows, [&](int t) {
            const int row = t / w;
            const int col = t % w;
            const Vec3 r = texel_direction(w, h, row, col);
            const Mat3 frame = tangent_frame(r);
            const double shift =
                static_cast<double>(splitmix64(seed ^ splitmix64(std::uint64_t(k) << 32 | std::uint64_t(t))) >> 11) *
                0x1.0p-53;
            std::vector<std::pair<int, double>> taps;
            taps.reserve(std::size_t(samples_per_texel) * 4);
            int accepted = 0;
            for (int s = 0; s < samples_per_texel; ++s) {
                Vec2 xi = hammersley(s, samples_per_texel);
                xi.y() = xi.y() + shift - std::floor(xi.y() + shift);
                const Vec3 hv = frame * sample_ggx_half(xi, rho);
                const Vec3 l = reflect(r, hv);
                if (l.dot(r) <= 0.0) {
                    continue;
                }
                ++accepted;
                const auto bt = equirect_taps(width, height, l);
                for (int q = 0; q < 4; ++q) {
                    if (bt.weight[q] != 0.0) {
                        taps.emplace_back(bt.index[q], bt.weight[q]);
                    }
                }
            }
            if (accepted == 0) {
                const auto bt = equirect_taps(width, height, r);
                for (int q = 0; q < 4; ++q) {
                    taps.emplace_back(bt.index[q], bt.weight[q]);
                }
                accepted = 1;
            }
            std::sort(taps.begin(), taps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            auto& out = rows[t];
            for (const auto& [idx, wgt] : taps) {
                if (!out.empty() && out.back().col() == idx) {
                    out.back() = Eigen::Triplet<double>(t, idx, out.back().value() + wgt / accepted);
                } else {
                    out.emplace_back(t, idx, wgt / accepted);
                }
            }
        });
        std::vector<Eigen::Triplet<double>> all;
        for (auto& r : rows) {
            all.insert(all.end(), r.begin(), r.end());
        }
        op.mats_[k].resize(n_rows, width * height);
        op.mats_[k].setFromTriplets(all.begin(), all.end());
        op.mats_[k].makeCompressed();
    }
    return op;
}

namespace {

using RowMat3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

Eigen::Map<const RowMat3> as_matrix(const RgbImage& img) {
    return Eigen::Map<const RowMat3>(img.pixels.data()->data(), static_cast<Eigen::Index>(img.pixels.size()), 3);
}

Eigen::Map<RowMat3> as_matrix(RgbImage& img) {
    return Eigen::Map<RowMat3>(img.pixels.data()->data(), static_cast<Eigen::Index>(img.pixels.size()), 3);
}

} // namespace

std::vector<RgbImage> PrefilterOperator::apply(const RgbImage& base) const {
    if (base.width != widths_[0] || base.height != heights_[0]) {
        throw Error(fmt::format("prefilter built for {}x{}, got {}x{}", widths_[0], heights_[0], base.width,
                                base.height));
    }
    std::vector<RgbImage> mips;
    mips.push_back(base);
    for (int k = 1; k < levels_; ++k) {
        RgbImage level(widths_[k], heights_[k]);
        as_matrix(level).noalias() = mats_[k] * as_matrix(base);
        mips.push_back(std::move(level));
    }
    return mips;
}

void PrefilterOperator::apply_transpose(const std::vector<RgbImage>& level_grads, RgbImage& base_grad) const {
    auto out = as_matrix(base_grad);
    out += as_matrix(level_grads[0]);
    for (int k = 1; k < levels_; ++k) {
        out.noalias() += mats_[k].transpose() * as_matrix(level_grads[k]);
    }
}

// ---------------------------------------------------------------------------
// Environment

EnvLight::EnvLight(int width, int height, double radiance)
    : raw_(width, height, Vec3::Constant(inverse_softplus(radiance))) {}

EnvLight EnvLight::from_radiance(const RgbImage& radiance) {
    EnvLight env;
    env.raw_ = RgbImage(radiance.width, radiance.height);
    for (std::size_t i = 0; i < radiance.pixels.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            env.raw_.pixels[i][c] = inverse_softplus(std::max(radiance.pixels[i][c], 1e-12));
        }
    }
    return env;
}

RgbImage EnvLight::radiance() const {
    RgbImage out(raw_.width, raw_.height);
    for (std::size_t i = 0; i < raw_.pixels.size(); ++i) {
        out.pixels[i] = raw_.pixels[i].unaryExpr([](double x) { return softplus(x); });
    }
    return out;
}

void EnvLight::prefilter(std::shared_ptr<const PrefilterOperator> op) {
    op_ = std::move(op);
    mips_ = op_->apply(radiance());
}

void EnvLight::restore(std::vector<RgbImage> mips, std::shared_ptr<const BrdfLut> lut) {
    if (mips.size() < 2) {
        throw Error("environment needs at least two mip levels");
    }
    mips_ = std::move(mips);
    lut_ = std::move(lut);
}

Vec3 EnvLight::specular_radiance(const Vec3& dir, double rho, Vec3* d_rho, Mat3* d_dir) const {
    const int n = levels();
    const auto [k0, f] = level_split(rho, n);
    Mat3 ja;
    Mat3 jb;
    const Vec3 a = sample_equirect(mips_[k0], dir, d_dir ? &ja : nullptr);
    const Vec3 b = sample_equirect(mips_[k0 + 1], dir, d_dir ? &jb : nullptr);
    if (d_rho) {
        *d_rho = (rho >= 0.0 && rho <= 1.0) ? Vec3((b - a) * (n - 1)) : Vec3::Zero();
    }
    if (d_dir) {
        *d_dir = (1 - f) * ja + f * jb;
    }
    return (1 - f) * a + f * b;
}

void EnvLight::specular_radiance_backward(const Vec3& dir, double rho, const Vec3& grad,
                                          std::vector<RgbImage>& mip_grads) const {
    const int n = levels();
    const auto [k0, f] = level_split(rho, n);
    for (int s = 0; s < 2; ++s) {
        const int k = k0 + s;
        const double lw = s == 0 ? 1 - f : f;
        if (lw == 0.0) {
            continue;
        }
        const auto taps = equirect_taps(mips_[k].width, mips_[k].height, dir);
        for (int q = 0; q < 4; ++q) {
            mip_grads[k].pixels[taps.index[q]] += lw * taps.weight[q] * grad;
        }
    }
}

std::vector<RgbImage> EnvLight::zero_mip_grads() const {
    std::vector<RgbImage> g;
    for (const auto& m : mips_) {
        g.emplace_back(m.width, m.height);
    }
    return g;
}

RgbImage EnvLight::raw_gradient(const std::vector<RgbImage>& mip_grads) const {
    if (!op_) {
        throw StateError("environment has no prefilter operator");
    }
    RgbImage g(raw_.width, raw_.height);
    op_->apply_transpose(mip_grads, g);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            g.pixels[i][c] *= sigmoid(raw_.pixels[i][c]);
        }
    }
    return g;
}

Vec3 split_sum_specular(const EnvLight& env, const Vec3& n, const Vec3& w_o, double rho, const Vec3& f0) {
    const double nov = std::clamp(n.dot(w_o), 1e-4, 1.0);
    const Vec3 r = reflect(w_o, n);
    const Vec2 m = env.lut().lookup(nov, rho);
    return env.specular_radiance(specular_direction(n, r, rho), rho).cwiseProduct(f0 * m.x() + Vec3::Constant(m.y()));
}

McEstimate reference_specular(const std::function<Vec3(const Vec3&)>& radiance, const Vec3& n, const Vec3& w_o,
                              double rho, const Vec3& f0, int samples, std::uint64_t seed) {
    if (samples < 2) {
        throw Error("reference_specular needs at least 2 samples");
    }
    const Mat3 frame = tangent_frame(n);
    const double nov = std::clamp(n.dot(w_o), 1e-4, 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Vec3 sum = Vec3::Zero();
    Vec3 sum2 = Vec3::Zero();
    for (int i = 0; i < samples; ++i) {
        const double x1 = uni(rng);
        const double x2 = uni(rng);
        const Vec3 h = frame * sample_ggx_half(Vec2(x1, x2), rho);
        const Vec3 l = reflect(w_o, h);
        const double nol = n.dot(l);
        if (nol <= 0.0) {
            continue;
        }
        const double voh = std::clamp(w_o.dot(h), 0.0, 1.0);
        const double noh = std::max(n.dot(h), 1e-12);
        const double g = smith_G(nov, nol, rho);
        const Vec3 val = radiance(l).cwiseProduct(fresnel_schlick(voh, f0)) * (g * voh / (noh * nov));
        sum += val;
        sum2 += val.cwiseProduct(val);
    }
    McEstimate est;
    est.mean = sum / samples;
    const Vec3 var = (sum2 / samples - est.mean.cwiseProduct(est.mean)).cwiseMax(0.0) * (samples / (samples - 1.0));
    est.std_error = (var / samples).cwiseSqrt();
    return est;
}

McEstimate reference_specular(const EnvLight& env, const Vec3& n, const Vec3& w_o, double rho, const Vec3& f0,
                              int samples, std::uint64_t seed) {
    const RgbImage rad = env.radiance();
    return reference_specular([&rad](const Vec3& d) { return sample_equirect(rad, d); }, n, w_o, rho, f0, samples,
                              seed);
}

} // namespace decalforge
