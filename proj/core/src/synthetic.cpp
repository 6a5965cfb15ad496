// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/synthetic.hpp"

#include <cmath>

#include <fmt/format.h>

#include "decalforge/primitives.hpp"

namespace decalforge::synthetic {

namespace {

const Vec3 kSun = Vec3(0.3, 0.8, 0.5).normalized();
const Vec3 kSphereCenter(0.0, 1.0, 0.0);
const Vec3 kTarget(0.0, 0.7, 0.0);

} // namespace

Vec3 sky(const Vec3& d) {
    const double s = 0.5 + 0.5 * d.y();
    const double sun = std::exp(4.0 * (d.dot(kSun) - 1.0));
    return Vec3(0.3 + 0.6 * s + 1.5 * sun, 0.3 + 0.5 * s + 1.35 * sun, 0.4 + 0.7 * s + 1.2 * sun);
}

RgbImage sky_map(int width, int height) {
    RgbImage img(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            img.at(r, c) = sky(texel_direction(width, height, r, c));
        }
    }
    return img;
}

Vec3 procedural_albedo(const Vec2& uv) {
    const double u = uv.x();
    const double v = uv.y();
    const double tau = 2.0 * kPi;
    return Vec3(0.5 + 0.3 * std::sin(tau * 1.5 * (u + 0.1)) * std::cos(tau * v),
                0.5 + 0.25 * std::cos(tau * 1.2 * u + 1.0) * std::sin(tau * 1.3 * v + 0.5),
                0.45 + 0.3 * std::sin(tau * (u + v)));
}

RgbImage procedural_texture(int resolution) {
    RgbImage img(resolution, resolution);
    const double s = resolution > 1 ? resolution - 1 : 1;
    for (int r = 0; r < resolution; ++r) {
        for (int c = 0; c < resolution; ++c) {
            img.at(r, c) = procedural_albedo(Vec2(c / s, r / s));
        }
    }
    return img;
}

Rgba8Image checkerboard(int size, int cells, const std::array<std::uint8_t, 4>& a,
                        const std::array<std::uint8_t, 4>& b) {
    if (size < 1 || cells < 1) {
        throw Error("checkerboard needs positive size and cell count");
    }
    Rgba8Image img(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const bool odd = ((r * cells / size) + (c * cells / size)) % 2 != 0;
            const auto& px = odd ? b : a;
            std::copy(px.begin(), px.end(), img.px(r, c));
        }
    }
    return img;
}

TriMesh sphere_on_plane(const SceneSpec& spec) {
    if (spec.cap_rings < 1 || spec.cap_rings >= spec.sphere_rings) {
        throw Error("cap_rings must be in [1, sphere_rings)");
    }
    const TriMesh sphere = primitives::uv_sphere(1.0, spec.sphere_segments, spec.sphere_rings, kSphereCenter);
    const TriMesh plane = primitives::ground_plane(spec.plane_size, 0.0, spec.plane_cells);
    const TriMesh both = primitives::merge(sphere, plane);
    const int cap_faces = spec.sphere_segments + 2 * spec.sphere_segments * (spec.cap_rings - 1);
    std::vector<std::uint8_t> flags(both.num_faces(), 0);
    std::fill(flags.begin(), flags.begin() + cap_faces, 1);
    return both.with_uv_area(std::move(flags));
}

double band_occlusion(const Vec3& p) {
    const double t = (p.x() - 0.25) / 0.22;
    return 1.0 - 0.75 * std::exp(-t * t);
}

double ground_truth_tau(const Vec3& p, bool band) {
    const double base = sigmoid(2.0);
    return logit(base * (band ? band_occlusion(p) : 1.0));
}

GroundTruth make_ground_truth(const SceneSpec& spec) {
    const TriMesh mesh = sphere_on_plane(spec);
    GroundTruth gt;
    gt.scene = make_scene(mesh, spec.config);
    Scene& s = gt.scene;
    gt.occlusion.resize(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3& p = mesh.vertex(v);
        const bool on_sphere = (p - kSphereCenter).norm() > 0.999 && (p - kSphereCenter).norm() < 1.001;
        s.set_albedo(v, Vec3(0.55 + 0.2 * std::sin(1.3 * p.x()), 0.45 + 0.15 * std::cos(1.1 * p.z()),
                             0.35 + 0.1 * std::sin(0.7 * (p.x() + p.z()))));
        s.set_roughness(v, on_sphere ? spec.sphere_roughness : spec.floor_roughness);
        s.set_metalness(v, on_sphere ? spec.sphere_metalness : spec.floor_metalness);
        s.set_shadow_logit(v, ground_truth_tau(p, spec.occlusion_band));
        gt.occlusion[v] = spec.occlusion_band ? band_occlusion(p) : 1.0;
    }
    RgbImage env = sky_map(spec.config.env_width, spec.config.env_height);
    for (auto& p : env.pixels) {
        p *= spec.env_scale;
    }
    s.env = EnvLight::from_radiance(env);
    bake_environment(s);
    s.texture = std::make_shared<const RgbImage>(procedural_texture(spec.config.texture_resolution));
    return gt;
}

std::vector<Camera> hemisphere_cameras(const SceneSpec& spec, int count, double azimuth_offset_deg) {
    std::vector<Camera> cams;
    const double golden = 180.0 * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double el = 15.0 + 60.0 * (i + 0.5) / count;
        const double az = azimuth_offset_deg + golden * i;
        cams.push_back(Camera::orbit(kTarget, std::fmod(az, 360.0), el, spec.camera_radius, spec.fov_deg,
                                     spec.image_size, spec.image_size));
    }
    return cams;
}

Dataset render_dataset(const Scene& scene, const std::vector<Camera>& cameras, const std::string& split,
                       AlbedoSource source) {
    Dataset data;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        View v;
        v.name = fmt::format("r_{:03d}", i);
        v.split = split;
        v.camera = cameras[i];
        v.image = render(scene, cameras[i], source);
        data.views.push_back(std::move(v));
    }
    return data;
}

Benchmark make_benchmark(const SceneSpec& spec) {
    Benchmark b;
    b.truth = make_ground_truth(spec);
    b.data = render_dataset(b.truth.scene, hemisphere_cameras(spec, spec.train_views, 0.0), "train");
    Dataset test = render_dataset(b.truth.scene, hemisphere_cameras(spec, spec.test_views, 17.0), "test");
    for (auto& v : test.views) {
        b.data.views.push_back(std::move(v));
    }
    return b;
}

} // namespace decalforge::synthetic
