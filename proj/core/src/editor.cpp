// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/editor.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "decalforge/trainer.hpp"

namespace decalforge {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// +1 for counter-clockwise quads, -1 for clockwise.
double winding(const Quad& q) {
    double area = 0.0;
    for (int k = 0; k < 4; ++k) {
        area += cross2(q[k], q[(k + 1) % 4]);
    }
    return area > 0 ? 1.0 : -1.0;
}

bool inside(const Quad& q, double sign, const Vec2& p) {
    for (int k = 0; k < 4; ++k) {
        if (sign * cross2(q[(k + 1) % 4] - q[k], p - q[k]) < 0.0) {
            return false;
        }
    }
    return true;
}

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + t * (b - a); }
double lerp(double a, double b, double t) { return a + t * (b - a); }

/// Decal in premultiplied linear RGB plus alpha.
struct LinearDecal {
    int width = 0;
    int height = 0;
    std::vector<Vec3> rgb;
    std::vector<double> alpha;

    explicit LinearDecal(const Rgba8Image& img) : width(img.width), height(img.height) {
        double lut[256];
        for (int i = 0; i < 256; ++i) {
            lut[i] = srgb_to_linear(i / 255.0);
        }
        const std::size_t n = std::size_t(width) * height;
        rgb.resize(n);
        alpha.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t* p = &img.data[i * 4];
            alpha[i] = p[3] / 255.0;
            rgb[i] = Vec3(lut[p[0]], lut[p[1]], lut[p[2]]) * alpha[i];
        }
    }

    void sample(const Vec2& st, Vec3& out_rgb, double& out_alpha) const {
        const double x = std::clamp(st.x(), 0.0, 1.0) * (width - 1);
        const double y = std::clamp(st.y(), 0.0, 1.0) * (height - 1);
        const int x0 = std::min(static_cast<int>(x), std::max(width - 2, 0));
        const int y0 = std::min(static_cast<int>(y), std::max(height - 2, 0));
        const int x1 = std::min(x0 + 1, width - 1);
        const int y1 = std::min(y0 + 1, height - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        const auto at = [&](int r, int c) { return std::size_t(r) * width + c; };
        out_rgb = lerp(lerp(rgb[at(y0, x0)], rgb[at(y0, x1)], fx), lerp(rgb[at(y1, x0)], rgb[at(y1, x1)], fx), fy);
        out_alpha = lerp(lerp(alpha[at(y0, x0)], alpha[at(y0, x1)], fx),
                         lerp(alpha[at(y1, x0)], alpha[at(y1, x1)], fx), fy);
    }
};

void require_texture(const Scene& scene) {
    if (!scene.texture) {
        throw StateError("scene has no baked albedo texture; run bake first");
    }
}

int clear_overrides(Scene& scene, const Quad& q) {
    const auto verts = vertices_in_quad(scene, q);
    for (int v : verts) {
        scene.roughness_override[v].reset();
    }
    return static_cast<int>(verts.size());
}

int write_overrides(Scene& scene, const Quad& q, double value) {
    const auto verts = vertices_in_quad(scene, q);
    for (int v : verts) {
        scene.roughness_override[v] = value;
    }
    return static_cast<int>(verts.size());
}

void check_value(double value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw Error(fmt::format("roughness value {} outside [0, 1]", value));
    }
}

EditReceipt do_decal(Scene& scene, const DecalSpec& spec, int id) {
    validate_quad(spec.anchors);
    require_texture(scene);
    if (spec.image.width < 1 || spec.image.height < 1 ||
        spec.image.data.size() != std::size_t(spec.image.width) * spec.image.height * 4) {
        throw Error("decal image is empty or malformed");
    }
    if (spec.roughness_override) {
        check_value(*spec.roughness_override);
    }
    const LinearDecal decal(spec.image);
    const Homography h = Homography::square_to_quad(spec.anchors);
    auto tex = std::make_shared<RgbImage>(*scene.texture);
    const auto texels = texels_in_quad(spec.anchors, tex->width, tex->height);
    const int w = tex->width;
    const int ht = tex->height;
    for (int idx : texels) {
        const Vec2 uv(w > 1 ? double(idx % w) / (w - 1) : 0.0, ht > 1 ? double(idx / w) / (ht - 1) : 0.0);
        Vec3 p;
        double a;
        decal.sample(h.unmap(uv), p, a);
        Vec3& t = tex->pixels[idx];
        t = p + (1.0 - a) * t;
    }
    EditReceipt r{id, static_cast<int>(texels.size()), 0};
    if (spec.roughness_override) {
        r.vertices = write_overrides(scene, spec.anchors, *spec.roughness_override);
    }
    scene.texture = std::move(tex);
    return r;
}

EditReceipt do_roughness(Scene& scene, const Quad& q, double value, int id) {
    validate_quad(q);
    check_value(value);
    return {id, 0, write_overrides(scene, q, value)};
}

EditReceipt do_revert(Scene& scene, const Quad& q, int id) {
    validate_quad(q);
    require_texture(scene);
    auto tex = std::make_shared<RgbImage>(*scene.texture);
    const auto texels = texels_in_quad(q, tex->width, tex->height);
    recompute_texels(scene, *tex, texels);
    EditReceipt r{id, static_cast<int>(texels.size()), clear_overrides(scene, q)};
    scene.texture = std::move(tex);
    return r;
}

int take_id(Scene& scene) { return scene.next_edit_id++; }

} // namespace

Homography Homography::square_to_quad(const Quad& q) {
    const Vec2 corners[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int k = 0; k < 4; ++k) {
        const double s = corners[k].x();
        const double t = corners[k].y();
        const double x = q[k].x();
        const double y = q[k].y();
        a.row(2 * k) << s, t, 1, 0, 0, 0, -s * x, -t * x;
        a.row(2 * k + 1) << 0, 0, 0, s, t, 1, -s * y, -t * y;
        b[2 * k] = x;
        b[2 * k + 1] = y;
    }
    const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
    if (!h.allFinite()) {
        throw GeometryError("degenerate quad: homography is singular");
    }
    Homography out;
    out.h_ << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0;
    out.inv_ = out.h_.inverse();
    return out;
}

Vec2 Homography::map(const Vec2& st) const {
    const Vec3 p = h_ * Vec3(st.x(), st.y(), 1.0);
    return p.head<2>() / p.z();
}

Vec2 Homography::unmap(const Vec2& uv) const {
    const Vec3 p = inv_ * Vec3(uv.x(), uv.y(), 1.0);
    return p.head<2>() / p.z();
}

void validate_quad(const Quad& q) {
    for (int k = 0; k < 4; ++k) {
        if (!q[k].allFinite() || q[k].x() < 0.0 || q[k].x() > 1.0 || q[k].y() < 0.0 || q[k].y() > 1.0) {
            throw GeometryError(fmt::format("anchor {} ({}, {}) is outside [0,1]^2", k, q[k].x(), q[k].y()));
        }
    }
    int sign = 0;
    for (int k = 0; k < 4; ++k) {
        const double c = cross2(q[(k + 1) % 4] - q[k], q[(k + 2) % 4] - q[(k + 1) % 4]);
        if (std::abs(c) <= 1e-12) {
            throw GeometryError(fmt::format("anchors {}, {}, {} are collinear", k, (k + 1) % 4, (k + 2) % 4));
        }
        const int s = c > 0 ? 1 : -1;
        if (sign != 0 && s != sign) {
            throw GeometryError("anchors do not form a convex, non-self-intersecting quad");
        }
        sign = s;
    }
}

std::vector<int> texels_in_quad(const Quad& q, int width, int height) {
    validate_quad(q);
    double lo_u = 1;
    double hi_u = 0;
    double lo_v = 1;
    double hi_v = 0;
    for (const auto& p : q) {
        lo_u = std::min(lo_u, p.x());
        hi_u = std::max(hi_u, p.x());
        lo_v = std::min(lo_v, p.y());
        hi_v = std::max(hi_v, p.y());
    }
    const double su = width > 1 ? width - 1 : 1;
    const double sv = height > 1 ? height - 1 : 1;
    const int c0 = std::max(0, static_cast<int>(std::floor(lo_u * su)));
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(hi_u * su)));
    const int r0 = std::max(0, static_cast<int>(std::floor(lo_v * sv)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(hi_v * sv)));
    const double sign = winding(q);
    std::vector<int> out;
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const Vec2 uv(width > 1 ? double(c) / (width - 1) : 0.0, height > 1 ? double(r) / (height - 1) : 0.0);
            if (inside(q, sign, uv)) {
                out.push_back(r * width + c);
            }
        }
    }
    return out;
}

std::vector<int> vertices_in_quad(const Scene& scene, const Quad& q) {
    validate_quad(q);
    const double sign = winding(q);
    std::vector<int> out;
    for (int v = 0; v < scene.num_vertices(); ++v) {
        if (scene.mesh.vertex_in_uv_area(v) && inside(q, sign, scene.chart.vertex_uv[v])) {
            out.push_back(v);
        }
    }
    return out;
}

EditReceipt apply_decal(Scene& scene, const DecalSpec& spec) {
    const EditReceipt r = do_decal(scene, spec, scene.next_edit_id);
    take_id(scene);
    scene.edits.push_back({EditRecord::Kind::Decal, r.id, spec.anchors, spec.image, spec.roughness_override});
    return r;
}

EditReceipt set_region_roughness(Scene& scene, const Quad& anchors, double value) {
    const EditReceipt r = do_roughness(scene, anchors, value, scene.next_edit_id);
    take_id(scene);
    scene.edits.push_back({EditRecord::Kind::Roughness, r.id, anchors, {}, value});
    return r;
}

EditReceipt revert_region(Scene& scene, const Quad& anchors) {
    const EditReceipt r = do_revert(scene, anchors, scene.next_edit_id);
    take_id(scene);
    scene.edits.push_back({EditRecord::Kind::Revert, r.id, anchors, {}, std::nullopt});
    return r;
}

EditReceipt revert_edit(Scene& scene, int edit_id) {
    for (const auto& e : scene.edits) {
        if (e.id == edit_id && e.kind != EditRecord::Kind::Revert) {
            const Quad q = e.anchors;
            return revert_region(scene, q);
        }
    }
    throw Error(fmt::format("no decal or roughness edit with id {}", edit_id));
}

void replay_edits(Scene& scene, const std::vector<EditRecord>& log) {
    for (const auto& e : log) {
        switch (e.kind) {
        case EditRecord::Kind::Decal:
            do_decal(scene, {e.image, e.anchors, e.value}, e.id);
            break;
        case EditRecord::Kind::Roughness:
            do_roughness(scene, e.anchors, e.value.value_or(0.0), e.id);
            break;
        case EditRecord::Kind::Revert:
            do_revert(scene, e.anchors, e.id);
            break;
        }
        scene.edits.push_back(e);
        scene.next_edit_id = std::max(scene.next_edit_id, e.id + 1);
    }
}

} // namespace decalforge
