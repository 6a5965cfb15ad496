// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "decalforge/ibl.hpp"
#include "decalforge/image.hpp"
#include "decalforge/mesh.hpp"
#include "decalforge/neural.hpp"
#include "decalforge/uv_param.hpp"

namespace decalforge {

struct SceneConfig {
    int texture_resolution = 1024;
    int env_width = 256;
    int env_height = 128;
    int env_levels = 6;
    int prefilter_spp = 256; // inference quality
    int lut_resolution = 64;
    int lut_samples = 1024;
    int hidden = 256;
    bool use_lr_net = true;
    double init_env_radiance = 0.5;
    double init_shadow_logit = 2.0;
    double init_raw_albedo = 0.0;
    double init_raw_roughness = 0.0;
    double init_raw_metalness = -2.0;
    std::uint64_t seed = 1;
    ChartOptions chart;
};

/// Learnable per-vertex values, six per vertex:
/// raw albedo (3), raw roughness, raw metalness, shadow logit.
struct VertexFeatures {
    static constexpr int kStride = 6;
    static constexpr int kAlbedo = 0;
    static constexpr int kRoughness = 3;
    static constexpr int kMetalness = 4;
    static constexpr int kShadow = 5;
};

struct EditRecord {
    enum class Kind { Decal, Roughness, Revert };
    Kind kind = Kind::Decal;
    int id = 0;
    std::array<Vec2, 4> anchors{};
    Rgba8Image image;            // Decal
    std::optional<double> value; // Decal roughness override or Roughness value
};

/// Everything a render needs: geometry, chart, learnables and baked caches.
struct Scene {
    SceneConfig config;
    TriMesh mesh;
    UvChart chart;
    VectorXd features; // VertexFeatures layout
    Mlp texture_net;   // gamma(uv) -> albedo logits
    Mlp lr_net;        // (gamma(x), gamma(r)) -> log multiplier
    EnvLight env;

    /// Baked albedo texture (linear RGB); replaced wholesale on edit.
    std::shared_ptr<const RgbImage> texture;
    /// Activated roughness overrides from edits, one slot per vertex.
    std::vector<std::optional<double>> roughness_override;
    std::vector<EditRecord> edits;
    int next_edit_id = 1;

    int num_vertices() const { return mesh.num_vertices(); }

    Vec3 albedo(int v) const;
    double roughness(int v) const; // honours overrides
    double metalness(int v) const;
    double shadow_logit(int v) const { return features[v * VertexFeatures::kStride + VertexFeatures::kShadow]; }

    void set_albedo(int v, const Vec3& a);
    void set_roughness(int v, double rho);
    void set_metalness(int v, double m);
    void set_shadow_logit(int v, double tau) { features[v * VertexFeatures::kStride + VertexFeatures::kShadow] = tau; }
};

/// Parameterizes the mesh's UV area and initializes every learnable.
Scene make_scene(const TriMesh& mesh, const SceneConfig& config = {});

/// Same, with a precomputed chart.
Scene make_scene(const TriMesh& mesh, const UvChart& chart, const SceneConfig& config);

/// Shared, memoized LUT and prefilter operators.
std::shared_ptr<const BrdfLut> shared_lut(int resolution, int samples);
std::shared_ptr<const PrefilterOperator> shared_prefilter(int width, int height, int levels, int spp,
                                                          std::uint64_t seed = 7);

/// Re-prefilters the environment at inference quality.
void bake_environment(Scene& scene);

/// Center of the mesh bounding box; orbit cameras look at it.
Vec3 scene_center(const Scene& scene);

/// Bilinear lookup of the baked texture at a UV coordinate.
Vec3 sample_texture(const RgbImage& texture, const Vec2& uv);

} // namespace decalforge
