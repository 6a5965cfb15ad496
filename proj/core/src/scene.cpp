// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/scene.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace decalforge {

namespace {
constexpr int S = VertexFeatures::kStride;
} // namespace

Vec3 Scene::albedo(int v) const {
    return Vec3(sigmoid(features[v * S]), sigmoid(features[v * S + 1]), sigmoid(features[v * S + 2]));
}

double Scene::roughness(int v) const {
    if (!roughness_override.empty() && roughness_override[v]) {
        return *roughness_override[v];
    }
    return sigmoid(features[v * S + VertexFeatures::kRoughness]);
}

double Scene::metalness(int v) const { return sigmoid(features[v * S + VertexFeatures::kMetalness]); }

void Scene::set_albedo(int v, const Vec3& a) {
    for (int c = 0; c < 3; ++c) {
        features[v * S + c] = logit(a[c]);
    }
}

void Scene::set_roughness(int v, double rho) { features[v * S + VertexFeatures::kRoughness] = logit(rho); }

void Scene::set_metalness(int v, double m) { features[v * S + VertexFeatures::kMetalness] = logit(m); }

std::shared_ptr<const BrdfLut> shared_lut(int resolution, int samples) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const BrdfLut>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{resolution, samples}];
    if (!slot) {
        slot = std::make_shared<const BrdfLut>(BrdfLut::bake(resolution, samples));
    }
    return slot;
}

std::shared_ptr<const PrefilterOperator> shared_prefilter(int width, int height, int levels, int spp,
                                                          std::uint64_t seed) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int, int, std::uint64_t>, std::shared_ptr<const PrefilterOperator>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{width, height, levels, spp, seed}];
    if (!slot) {
        slot = std::make_shared<const PrefilterOperator>(PrefilterOperator::build(width, height, levels, spp, seed));
    }
    return slot;
}

Scene make_scene(const TriMesh& mesh, const SceneConfig& config) {
    UvChart chart;
    if (mesh.has_uv_area()) {
        ChartOptions opts = config.chart;
        opts.margin = margin_for_resolution(config.texture_resolution);
        chart = parameterize(mesh, opts);
    } else {
        chart.vertex_uv.assign(mesh.num_vertices(), Vec2::Zero());
    }
    return make_scene(mesh, chart, config);
}

Scene make_scene(const TriMesh& mesh, const UvChart& chart, const SceneConfig& config) {
    if (static_cast<int>(chart.vertex_uv.size()) != mesh.num_vertices()) {
        throw Error("chart does not match the mesh");
    }
    Scene scene;
    scene.config = config;
    scene.mesh = mesh;
    scene.chart = chart;
    const int n = mesh.num_vertices();
    scene.features = VectorXd::Zero(Eigen::Index(n) * S);
    for (int v = 0; v < n; ++v) {
        for (int c = 0; c < 3; ++c) {
            scene.features[v * S + c] = config.init_raw_albedo;
        }
        scene.features[v * S + VertexFeatures::kRoughness] = config.init_raw_roughness;
        scene.features[v * S + VertexFeatures::kMetalness] = config.init_raw_metalness;
        scene.features[v * S + VertexFeatures::kShadow] = config.init_shadow_logit;
    }
    scene.texture_net = Mlp::kaiming(PosEnc::output_dim(2), config.hidden, 3, config.seed);
    scene.texture_net.bias(2).setConstant(logit(0.5));
    scene.lr_net = Mlp::kaiming(PosEnc::output_dim(6), config.hidden, 3, config.seed + 1);
    scene.lr_net.weight(2).setZero();
    scene.lr_net.bias(2).setZero();
    scene.env = EnvLight(config.env_width, config.env_height, config.init_env_radiance);
    bake_environment(scene);
    scene.roughness_override.assign(n, std::nullopt);
    return scene;
}

void bake_environment(Scene& scene) {
    const auto& c = scene.config;
    scene.env.set_lut(shared_lut(c.lut_resolution, c.lut_samples));
    scene.env.prefilter(shared_prefilter(c.env_width, c.env_height, c.env_levels, c.prefilter_spp));
}

Vec3 scene_center(const Scene& scene) {
    if (scene.mesh.num_vertices() == 0) {
        return Vec3::Zero();
    }
    Vec3 lo = scene.mesh.vertex(0);
    Vec3 hi = lo;
    for (const auto& v : scene.mesh.vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return 0.5 * (lo + hi);
}

Vec3 sample_texture(const RgbImage& texture, const Vec2& uv) {
    const Vec2 t = uv_to_texel(uv, texture.width, texture.height);
    const int x0 = std::min(static_cast<int>(t.x()), std::max(texture.width - 2, 0));
    const int y0 = std::min(static_cast<int>(t.y()), std::max(texture.height - 2, 0));
    const int x1 = std::min(x0 + 1, texture.width - 1);
    const int y1 = std::min(y0 + 1, texture.height - 1);
    const double fx = t.x() - x0;
    const double fy = t.y() - y0;
    return (1 - fy) * ((1 - fx) * texture.at(y0, x0) + fx * texture.at(y0, x1)) +
           fy * ((1 - fx) * texture.at(y1, x0) + fx * texture.at(y1, x1));
}

} // namespace decalforge
