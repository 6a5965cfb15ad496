// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

namespace decalforge {

namespace {

double psnr_from_mse(double mse) {
    if (mse == 0.0) {
        return kPsnrInfinity;
    }
    return 10.0 * std::log10(1.0 / mse);
}

void check_shapes(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(fmt::format("image shapes differ: {}x{} vs {}x{}", a.width, a.height, b.width, b.height));
    }
}

double variance(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        var += (x - mean) * (x - mean);
    }
    return var / static_cast<double>(xs.size());
}

} // namespace

double psnr(const RgbImage& a, const RgbImage& b) {
    check_shapes(a, b);
    return psnr_from_mse(mean_squared_error(a, b));
}

double psnr(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>& mask) {
    check_shapes(a, b);
    if (mask.size() != a.pixels.size()) {
        throw Error("mask size does not match the images");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            sum += (a.pixels[i] - b.pixels[i]).squaredNorm();
            n += 3;
        }
    }
    if (n == 0) {
        throw Error("mask selects no pixels");
    }
    return psnr_from_mse(sum / static_cast<double>(n));
}

RvwReport rvw(const TriMesh& mesh, const UvChart& chart, int n_pairs, std::uint64_t seed) {
    if (n_pairs < 2) {
        throw Error(fmt::format("rvw needs at least 2 pairs, got {}", n_pairs));
    }
    if (static_cast<int>(chart.vertex_uv.size()) != mesh.num_vertices()) {
        throw Error("chart does not match the mesh");
    }
    std::vector<int> verts;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.vertex_in_uv_area(v)) {
            verts.push_back(v);
        }
    }
    if (verts.size() < 2) {
        throw StateError("UV area has fewer than two vertices");
    }

    RvwReport rep;
    rep.n_pairs = n_pairs;
    rep.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, verts.size() - 1);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n_pairs);
    const long long max_draws = 100LL * n_pairs + 1000;
    long long draws = 0;
    while (static_cast<int>(pairs.size()) < n_pairs) {
        if (++draws > max_draws) {
            throw GeometryError("rvw could not find pairs with distinct UVs");
        }
        const int a = verts[pick(rng)];
        const int b = verts[pick(rng)];
        if ((chart.vertex_uv[a] - chart.vertex_uv[b]).norm() < 1e-9) {
            ++rep.resampled;
            continue;
        }
        pairs.emplace_back(a, b);
    }

    std::map<int, std::vector<int>> by_source;
    for (int i = 0; i < n_pairs; ++i) {
        by_source[pairs[i].first].push_back(i);
    }
    rep.ratios.assign(n_pairs, 0.0);
    for (const auto& [src, idx] : by_source) {
        const auto dist = geodesic_distances_from(mesh, src);
        for (int i : idx) {
            const double g = dist[pairs[i].second];
            if (!std::isfinite(g)) {
                throw TopologyError("UV area is disconnected");
            }
            rep.ratios[i] = g / (chart.vertex_uv[src] - chart.vertex_uv[pairs[i].second]).norm();
        }
    }

    double mean = 0.0;
    for (double r : rep.ratios) {
        mean += r;
    }
    rep.mean = mean / n_pairs;
    rep.raw_variance = variance(rep.ratios);
    std::vector<double> normalized(rep.ratios);
    for (double& r : normalized) {
        r /= rep.mean;
    }
    rep.variance = variance(normalized);
    return rep;
}

std::string to_json(const RvwReport& r) {
    nlohmann::json j;
    j["n_pairs"] = r.n_pairs;
    j["seed"] = r.seed;
    j["mean_ratio"] = r.mean;
    j["variance"] = r.variance;
    j["raw_variance"] = r.raw_variance;
    j["resampled"] = r.resampled;
    j["normalization"] = "ratios divided by their mean before the variance";
    return j.dump(2);
}

std::string to_text(const RvwReport& r) {
    std::string s;
    s += fmt::format("{:<16}{}\n", "pairs", r.n_pairs);
    s += fmt::format("{:<16}{}\n", "seed", r.seed);
    s += fmt::format("{:<16}{:.6g}\n", "mean ratio", r.mean);
    s += fmt::format("{:<16}{:.6g}\n", "rvw", r.variance);
    s += fmt::format("{:<16}{:.6g}\n", "raw variance", r.raw_variance);
    s += fmt::format("{:<16}{}\n", "resampled", r.resampled);
    s += "ratios are divided by their mean before the variance\n";
    return s;
}

} // namespace decalforge
