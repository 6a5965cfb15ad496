// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "decalforge/dataset.hpp"
#include "decalforge/scene.hpp"
#include "decalforge/shading.hpp"

namespace decalforge::synthetic {

/// Smooth analytic environment: sky gradient plus a soft sun lobe.
Vec3 sky(const Vec3& dir);

/// `sky` sampled at equirectangular texel centers.
RgbImage sky_map(int width, int height);

/// Smooth procedural albedo in [0.1, 0.9], sampled on the bake grid.
Vec3 procedural_albedo(const Vec2& uv);
RgbImage procedural_texture(int resolution);

/// RGBA checkerboard with `cells` x `cells` squares.
Rgba8Image checkerboard(int size, int cells, const std::array<std::uint8_t, 4>& a = {20, 20, 20, 255},
                        const std::array<std::uint8_t, 4>& b = {235, 235, 235, 255});

struct SceneSpec {
    int sphere_segments = 48;
    int sphere_rings = 24;
    int cap_rings = 8; // rings from the +Y pole forming the UV area
    double plane_size = 6.0;
    int plane_cells = 12;
    int image_size = 128;
    int train_views = 60;
    int test_views = 10;
    double camera_radius = 4.2;
    double fov_deg = 45.0;
    /// Darkens a band across the sphere top and the floor through sigma(tau).
    bool occlusion_band = false;
    double sphere_roughness = 0.3;
    double sphere_metalness = 0.1;
    double floor_roughness = 0.7;
    double floor_metalness = 0.02;
    double env_scale = 1.0; // multiplies `sky`
    SceneConfig config; // used for the ground-truth scene
};

/// Unit sphere resting on a ground plane; the top cap is the UV area.
TriMesh sphere_on_plane(const SceneSpec& spec);

/// Ground-truth occlusion in (0, 1] at a world point (1 outside the band).
double band_occlusion(const Vec3& p);

/// Ground-truth shadow logit at a world point.
double ground_truth_tau(const Vec3& p, bool band);

struct GroundTruth {
    Scene scene; // rendered through its baked texture
    std::vector<double> occlusion; // per vertex
};

GroundTruth make_ground_truth(const SceneSpec& spec);

/// Cameras on the upper hemisphere around the scene, deterministic.
std::vector<Camera> hemisphere_cameras(const SceneSpec& spec, int count, double azimuth_offset_deg);

/// Renders the cameras into a dataset split.
Dataset render_dataset(const Scene& scene, const std::vector<Camera>& cameras, const std::string& split,
                       AlbedoSource source = AlbedoSource::Texture);

/// Ground-truth scene plus train and test renders.
struct Benchmark {
    GroundTruth truth;
    Dataset data;
};

Benchmark make_benchmark(const SceneSpec& spec);

} // namespace decalforge::synthetic
