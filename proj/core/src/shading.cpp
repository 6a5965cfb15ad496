// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/shading.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "decalforge/parallel.hpp"

namespace decalforge {

namespace {

constexpr int S = VertexFeatures::kStride;
constexpr double kNoVMin = 1e-4;

Vec3 reflect(const Vec3& w, const Vec3& n) { return 2.0 * w.dot(n) * n - w; }

double dsigmoid(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

/// Everything except network-driven albedo.
FragmentFeatures gather_common(const Scene& scene, const Fragment& frag, AlbedoSource source) {
    const Face& face = scene.mesh.face(frag.face);
    FragmentFeatures f;
    f.in_uv_area = scene.mesh.in_uv_area(frag.face);
    f.uv = interpolate(frag, scene.chart.vertex_uv[face[0]], scene.chart.vertex_uv[face[1]],
                       scene.chart.vertex_uv[face[2]]);
    double tau = 0.0;
    for (int k = 0; k < 3; ++k) {
        const int v = face[k];
        const double w = frag.bary[k];
        f.roughness += w * scene.roughness(v);
        f.metalness += w * scene.metalness(v);
        tau += w * scene.shadow_logit(v);
        if (!f.in_uv_area) {
            f.albedo += w * scene.albedo(v);
        }
    }
    f.shadow_logit = tau;
    if (f.in_uv_area && source == AlbedoSource::Texture) {
        if (!scene.texture) {
            throw StateError("scene has no baked texture");
        }
        f.albedo = sample_texture(*scene.texture, f.uv);
    }
    Vec3 n = interpolate_normal(scene.mesh, frag);
    if (n.dot(-frag.view_dir) < 0.0) {
        n = -n;
    }
    f.normal = n;
    return f;
}

Vec3 lr_multiplier(const Scene& scene, const Vec3& x, const Vec3& r) {
    if (!scene.config.use_lr_net) {
        return Vec3::Ones();
    }
    VectorXd p(6);
    p << x, r;
    const VectorXd y = scene.lr_net.forward(PosEnc::encode(p));
    return Vec3(std::exp(y[0]), std::exp(y[1]), std::exp(y[2]));
}

} // namespace

FragmentFeatures gather_features(const Scene& scene, const Fragment& frag, AlbedoSource source) {
    FragmentFeatures f = gather_common(scene, frag, source);
    if (f.in_uv_area && source == AlbedoSource::Network) {
        const VectorXd y = scene.texture_net.forward(PosEnc::encode(VectorXd(f.uv)));
        f.albedo = Vec3(sigmoid(y[0]), sigmoid(y[1]), sigmoid(y[2]));
    }
    return f;
}

ShadingResult shade(const EnvLight& env, const FragmentFeatures& f, const Vec3& w_o, const Vec3& c_lr) {
    const Vec3& n = f.normal;
    const double nov = std::clamp(n.dot(w_o), kNoVMin, 1.0);
    const Vec3 r = reflect(w_o, n);
    const double rho = f.roughness;
    const double m = f.metalness;
    const Vec3 look = specular_direction(n, r, rho);
    ShadingResult res;
    res.l_specular = env.specular_radiance(look, rho);
    const Vec2 lut = env.lut().lookup(nov, rho);
    const Vec3 f0 = Vec3::Constant(0.04 * (1.0 - m)) + m * f.albedo;
    res.m_specular = f0 * lut.x() + Vec3::Constant(lut.y());
    res.c_lr = c_lr;
    res.c_diffuse = f.albedo * (1.0 - m);
    res.c_specular = c_lr.cwiseProduct(res.l_specular).cwiseProduct(res.m_specular);
    res.shadow = sigmoid(f.shadow_logit);
    res.rgb = res.shadow * (res.c_diffuse + res.c_specular);
    return res;
}

ShadingResult shade(const Scene& scene, const Fragment& frag, AlbedoSource source) {
    const FragmentFeatures f = gather_features(scene, frag, source);
    const Vec3 w_o = -frag.view_dir;
    return shade(scene.env, f, w_o, lr_multiplier(scene, frag.position, reflect(w_o, f.normal)));
}

SceneGrad SceneGrad::zeros(const Scene& scene) {
    SceneGrad g;
    g.features = VectorXd::Zero(scene.features.size());
    g.texture_net = VectorXd::Zero(scene.texture_net.num_params());
    g.lr_net = VectorXd::Zero(scene.lr_net.num_params());
    g.mip_grads = scene.env.zero_mip_grads();
    return g;
}

RgbImage SceneGrad::env_raw(const Scene& scene) const { return scene.env.raw_gradient(mip_grads); }

const std::vector<Vec3>& BatchShader::forward(const Scene& scene, const std::vector<Fragment>& frags,
                                              AlbedoSource source) {
    const int n = static_cast<int>(frags.size());
    source_ = source;
    frags_ = frags;
    feats_.assign(n, FragmentFeatures{});
    results_.assign(n, ShadingResult{});
    aux_.assign(n, Aux{});
    rgb_.assign(n, Vec3::Zero());
    valid_ = false;

    parallel_for(
        0, n,
        [&](int i) {
            feats_[i] = gather_common(scene, frags_[i], source);
            aux_[i].w_o = -frags_[i].view_dir;
        },
        workers_);

    // Texture network over UV-area fragments.
    int n_uv = 0;
    if (source == AlbedoSource::Network) {
        for (int i = 0; i < n; ++i) {
            if (feats_[i].in_uv_area) {
                aux_[i].uv_col = n_uv++;
            }
        }
    }
    if (n_uv > 0) {
        MatrixXd p(2, n_uv);
        for (int i = 0; i < n; ++i) {
            if (aux_[i].uv_col >= 0) {
                p.col(aux_[i].uv_col) = feats_[i].uv;
            }
        }
        tex_out_ = scene.texture_net.forward(PosEnc::encode(p), &tex_cache_);
        for (int i = 0; i < n; ++i) {
            if (aux_[i].uv_col >= 0) {
                const auto y = tex_out_.col(aux_[i].uv_col);
                feats_[i].albedo = Vec3(sigmoid(y[0]), sigmoid(y[1]), sigmoid(y[2]));
            }
        }
    } else {
        tex_cache_ = Mlp::Cache{};
    }

    // Local reflection network over all fragments.
    MatrixXd lr_out;
    if (scene.config.use_lr_net && n > 0) {
        MatrixXd p(6, n);
        for (int i = 0; i < n; ++i) {
            p.col(i) << frags_[i].position, reflect(aux_[i].w_o, feats_[i].normal);
        }
        lr_out = scene.lr_net.forward(PosEnc::encode(p), &lr_cache_);
    } else {
        lr_cache_ = Mlp::Cache{};
    }

    parallel_for(
        0, n,
        [&](int i) {
            const FragmentFeatures& f = feats_[i];
            const Vec3 c_lr = lr_out.size() ? Vec3(lr_out.col(i).array().exp()) : Vec3::Ones();
            results_[i] = shade(scene.env, f, aux_[i].w_o, c_lr);
            rgb_[i] = results_[i].rgb;

            Aux& a = aux_[i];
            const double nov = std::clamp(f.normal.dot(a.w_o), kNoVMin, 1.0);
            const Vec3 r = reflect(a.w_o, f.normal);
            Vec3 dlook;
            a.look = specular_direction(f.normal, r, f.roughness, &dlook);
            Vec3 dl_level;
            Mat3 jdir;
            scene.env.specular_radiance(a.look, f.roughness, &dl_level, &jdir);
            a.dl_drho = dl_level + jdir * dlook;
            a.lut = scene.env.lut().lookup(nov, f.roughness, &a.dlut_drho);
        },
        workers_);
    valid_ = true;
    return rgb_;
}

void BatchShader::backward(const Scene& scene, const std::vector<Vec3>& rgb_grad, SceneGrad& grad) const {
    if (!valid_) {
        throw StateError("shading backward called without a forward pass");
    }
    const int n = static_cast<int>(frags_.size());
    if (static_cast<int>(rgb_grad.size()) != n) {
        throw Error(fmt::format("expected {} pixel gradients, got {}", n, rgb_grad.size()));
    }
    if (grad.features.size() != scene.features.size()) {
        grad = SceneGrad::zeros(scene);
    }

    MatrixXd d_tex = MatrixXd::Zero(3, tex_cache_.valid ? tex_cache_.x.cols() : 0);
    MatrixXd d_lr = MatrixXd::Zero(3, lr_cache_.valid ? n : 0);

    const int workers = workers_ > 0 ? workers_ : worker_count();
    const int chunks = std::clamp(workers, 1, std::max(1, n));
    std::vector<VectorXd> feat_parts(chunks);
    std::vector<std::vector<RgbImage>> mip_parts(chunks);

    parallel_chunks(
        0, n,
        [&](int begin, int end, int chunk) {
            VectorXd& gf = feat_parts[chunk];
            gf = VectorXd::Zero(scene.features.size());
            auto& gm = mip_parts[chunk];
            gm = scene.env.zero_mip_grads();
            for (int i = begin; i < end; ++i) {
                const Vec3& g = rgb_grad[i];
                if (g.isZero(0.0)) {
                    continue;
                }
                const ShadingResult& R = results_[i];
                const FragmentFeatures& f = feats_[i];
                const Aux& a = aux_[i];
                const double s = R.shadow;
                const double m = f.metalness;

                const double d_tau = g.dot(R.c_diffuse + R.c_specular) * s * (1.0 - s);
                const Vec3 dc = s * g;
                Vec3 da = dc * (1.0 - m);
                double dm = -dc.dot(f.albedo);

                const Vec3 d_clr = dc.cwiseProduct(R.l_specular).cwiseProduct(R.m_specular);
                const Vec3 d_l = dc.cwiseProduct(R.c_lr).cwiseProduct(R.m_specular);
                const Vec3 d_m = dc.cwiseProduct(R.c_lr).cwiseProduct(R.l_specular);

                const Vec3 f0 = Vec3::Constant(0.04 * (1.0 - m)) + m * f.albedo;
                const Vec3 d_f0 = d_m * a.lut.x();
                const double d_f1 = d_m.dot(f0);
                const double d_f2 = d_m.sum();
                da += d_f0 * m;
                dm += d_f0.dot(f.albedo - Vec3::Constant(0.04));

                const double d_rho = d_f1 * a.dlut_drho.x() + d_f2 * a.dlut_drho.y() + d_l.dot(a.dl_drho);
                scene.env.specular_radiance_backward(a.look, f.roughness, d_l, gm);

                const Face& face = scene.mesh.face(frags_[i].face);
                for (int k = 0; k < 3; ++k) {
                    const int v = face[k];
                    const double w = frags_[i].bary[k];
                    if (w == 0.0) {
                        continue;
                    }
                    const double* raw = scene.features.data() + std::size_t(v) * S;
                    double* out = gf.data() + std::size_t(v) * S;
                    out[VertexFeatures::kShadow] += w * d_tau;
                    out[VertexFeatures::kMetalness] += w * dm * dsigmoid(raw[VertexFeatures::kMetalness]);
                    if (scene.roughness_override.empty() || !scene.roughness_override[v]) {
                        out[VertexFeatures::kRoughness] += w * d_rho * dsigmoid(raw[VertexFeatures::kRoughness]);
                    }
                    if (!f.in_uv_area) {
                        for (int c = 0; c < 3; ++c) {
                            out[c] += w * da[c] * dsigmoid(raw[c]);
                        }
                    }
                }
                if (a.uv_col >= 0) {
                    for (int c = 0; c < 3; ++c) {
                        d_tex(c, a.uv_col) = da[c] * f.albedo[c] * (1.0 - f.albedo[c]);
                    }
                }
                if (d_lr.cols() > 0) {
                    d_lr.col(i) = d_clr.cwiseProduct(R.c_lr);
                }
            }
        },
        chunks);

    for (int c = 0; c < chunks; ++c) {
        if (feat_parts[c].size() == 0) {
            continue;
        }
        grad.features += feat_parts[c];
        for (std::size_t k = 0; k < grad.mip_grads.size(); ++k) {
            auto& dst = grad.mip_grads[k].pixels;
            const auto& src = mip_parts[c][k].pixels;
            for (std::size_t t = 0; t < dst.size(); ++t) {
                dst[t] += src[t];
            }
        }
    }
    if (d_tex.cols() > 0) {
        scene.texture_net.backward(tex_cache_, d_tex, grad.texture_net);
    }
    if (d_lr.cols() > 0) {
        scene.lr_net.backward(lr_cache_, d_lr, grad.lr_net);
    }
}

RgbImage render(const Scene& scene, const FragmentBuffer& buffer, AlbedoSource source) {
    RgbImage img(buffer.width(), buffer.height());
    const auto frags = buffer.fragments();
    constexpr std::size_t kChunk = 4096;
    BatchShader shader;
    for (std::size_t b = 0; b < frags.size(); b += kChunk) {
        const std::vector<Fragment> part(frags.begin() + b, frags.begin() + std::min(frags.size(), b + kChunk));
        const auto& rgb = shader.forward(scene, part, source);
        for (std::size_t i = 0; i < part.size(); ++i) {
            img.at(part[i].row, part[i].col) = rgb[i];
        }
    }
    return img;
}

RgbImage render(const Scene& scene, const Camera& cam, AlbedoSource source) {
    return render(scene, rasterize(scene.mesh, cam), source);
}

} // namespace decalforge
