// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "decalforge/raster.hpp"
#include "decalforge/scene.hpp"

namespace decalforge {

/// Where UV-area albedo comes from: the live texture network (training) or
/// the baked texture map (inference).
enum class AlbedoSource { Network, Texture };

struct FragmentFeatures {
    Vec3 albedo = Vec3::Zero();
    double roughness = 0.0;
    double metalness = 0.0;
    double shadow_logit = 0.0;
    Vec3 normal = Vec3::UnitZ(); // interpolated, facing the viewer
    Vec2 uv = Vec2::Zero();
    bool in_uv_area = false;
};

struct ShadingResult {
    Vec3 rgb = Vec3::Zero();
    Vec3 c_diffuse = Vec3::Zero();
    Vec3 c_specular = Vec3::Zero();
    Vec3 c_lr = Vec3::Ones();
    Vec3 l_specular = Vec3::Zero();
    Vec3 m_specular = Vec3::Zero();
    double shadow = 1.0; // sigmoid(tau)
};

FragmentFeatures gather_features(const Scene& scene, const Fragment& frag, AlbedoSource source);

/// Shades one fragment. `c_lr` is the local-reflection multiplier
/// (exp of the network output); pass ones to disable it.
ShadingResult shade(const EnvLight& env, const FragmentFeatures& f, const Vec3& w_o, const Vec3& c_lr);

/// Full forward model for one fragment, including the LR network.
ShadingResult shade(const Scene& scene, const Fragment& frag, AlbedoSource source);

/// Gradients for every learnable of a scene.
struct SceneGrad {
    VectorXd features;
    VectorXd texture_net;
    VectorXd lr_net;
    std::vector<RgbImage> mip_grads;

    static SceneGrad zeros(const Scene& scene);
    /// Gradient on the raw environment texels.
    RgbImage env_raw(const Scene& scene) const;
};

/// Batched forward/backward over fragments.
class BatchShader {
public:
    explicit BatchShader(int workers = 0) : workers_(workers) {}

    const std::vector<Vec3>& forward(const Scene& scene, const std::vector<Fragment>& frags, AlbedoSource source);

    /// Accumulates d(loss)/d(params) given d(loss)/d(rgb) for the last forward.
    void backward(const Scene& scene, const std::vector<Vec3>& rgb_grad, SceneGrad& grad) const;

    const std::vector<ShadingResult>& results() const { return results_; }
    const std::vector<FragmentFeatures>& features() const { return feats_; }

private:
    struct Aux {
        Vec3 w_o;
        Vec3 look;
        Vec3 dl_drho; // total derivative of l_specular wrt roughness
        Vec2 lut;
        Vec2 dlut_drho;
        int uv_col = -1; // column in the texture-net batch
    };

    int workers_;
    AlbedoSource source_ = AlbedoSource::Texture;
    bool valid_ = false;
    std::vector<Fragment> frags_;
    std::vector<FragmentFeatures> feats_;
    std::vector<ShadingResult> results_;
    std::vector<Aux> aux_;
    std::vector<Vec3> rgb_;
    Mlp::Cache tex_cache_;
    Mlp::Cache lr_cache_;
    MatrixXd tex_out_;
};

/// Renders a camera view. Background pixels are black.
RgbImage render(const Scene& scene, const Camera& cam, AlbedoSource source = AlbedoSource::Texture);
RgbImage render(const Scene& scene, const FragmentBuffer& buffer, AlbedoSource source = AlbedoSource::Texture);

} // namespace decalforge
