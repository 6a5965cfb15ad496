// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "decalforge/parallel.hpp"
#include "decalforge/shading.hpp"

namespace decalforge {

namespace {

Eigen::Map<VectorXd> flat(RgbImage& img) {
    return Eigen::Map<VectorXd>(img.pixels.front().data(), Eigen::Index(img.pixels.size()) * 3);
}

Eigen::Map<const VectorXd> flat(const RgbImage& img) {
    return Eigen::Map<const VectorXd>(img.pixels.front().data(), Eigen::Index(img.pixels.size()) * 3);
}

} // namespace

void TrainConfig::validate() const {
    if (iterations < 0) {
        throw Error(fmt::format("iterations must be >= 0, got {}", iterations));
    }
    if (batch_size <= 0) {
        throw Error(fmt::format("batch_size must be positive, got {}", batch_size));
    }
    if (!(lr_net >= 0.0) || !(lr_features >= 0.0)) {
        throw Error("learning rates must be non-negative");
    }
    if (texture_resolution < 2 || env_width < 8 || env_height < 4 || prefilter_spp < 1) {
        throw Error("texture/env resolution or prefilter samples out of range");
    }
}

TrainingSet build_training_set(const TriMesh& mesh, const Dataset& data,
                               const std::optional<std::filesystem::path>& cache_dir) {
    TrainingSet set;
    set.num_views = data.size();
    for (int v = 0; v < data.size(); ++v) {
        const View& view = data.views[v];
        const FragmentBuffer buf =
            cache_dir ? rasterize_cached(mesh, view.camera, *cache_dir) : rasterize(mesh, view.camera);
        for (const Fragment& f : buf.fragments()) {
            const std::size_t idx = std::size_t(f.row) * view.image.width + f.col;
            if (!view.alpha.empty() && view.alpha[idx] <= 0.0) {
                continue;
            }
            set.samples.push_back({v, f, view.image.pixels[idx]});
        }
    }
    return set;
}

TrainResult train(Scene& scene, const TrainingSet& set, const TrainConfig& config) {
    config.validate();
    TrainResult result;
    if (config.iterations == 0) {
        return result;
    }
    if (set.samples.empty()) {
        throw Error("training set has no covered pixels");
    }
    const auto& sc = scene.config;
    const auto op = shared_prefilter(sc.env_width, sc.env_height, sc.env_levels, config.prefilter_spp);
    scene.env.set_lut(shared_lut(sc.lut_resolution, sc.lut_samples));
    scene.env.prefilter(op);

    Adam adam_features(scene.features.size());
    Adam adam_env(Eigen::Index(scene.env.raw().pixels.size()) * 3);
    Adam adam_tex(scene.texture_net.num_params());
    Adam adam_lr(scene.lr_net.num_params());

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, set.samples.size() - 1);
    const int batch = config.batch_size;
    std::vector<std::size_t> idx(batch);
    std::vector<Fragment> frags(batch);
    std::vector<Vec3> rgb_grad(batch);
    BatchShader shader;
    result.loss.reserve(config.iterations);

    for (int it = 0; it < config.iterations; ++it) {
        for (int b = 0; b < batch; ++b) {
            idx[b] = pick(rng);
            frags[b] = set.samples[idx[b]].frag;
        }
        const auto& rgb = shader.forward(scene, frags, AlbedoSource::Network);
        double loss = 0.0;
        const double scale = 2.0 / (3.0 * batch);
        for (int b = 0; b < batch; ++b) {
            const Vec3 d = rgb[b] - set.samples[idx[b]].target;
            loss += d.squaredNorm();
            rgb_grad[b] = scale * d;
        }
        loss /= 3.0 * batch;
        if (!std::isfinite(loss)) {
            std::string where;
            for (int b = 0; b < batch; ++b) {
                if (!rgb[b].allFinite()) {
                    where += fmt::format("{}{}(view {}, pixel {},{})", where.empty() ? "" : ", ", idx[b],
                                         set.samples[idx[b]].view, frags[b].row, frags[b].col);
                    if (where.size() > 200) {
                        break;
                    }
                }
            }
            throw NumericError(fmt::format("non-finite loss at iteration {}; batch indices: {}", it,
                                           where.empty() ? "none non-finite in output" : where));
        }
        result.loss.push_back(loss);

        SceneGrad grad = SceneGrad::zeros(scene);
        shader.backward(scene, rgb_grad, grad);
        const RgbImage env_grad = grad.env_raw(scene);

        adam_features.step(scene.features, grad.features, config.lr_features);
        adam_env.step(flat(scene.env.raw()), flat(env_grad), config.lr_features);
        adam_tex.step(scene.texture_net.params(), grad.texture_net, config.lr_net);
        adam_lr.step(scene.lr_net.params(), grad.lr_net, config.lr_net);
        scene.env.prefilter(op);

        if (config.on_log && config.log_every > 0 && ((it + 1) % config.log_every == 0 || it == 0)) {
            config.on_log(it + 1, loss);
        }
    }
    result.skipped_steps = adam_features.skipped() + adam_env.skipped() + adam_tex.skipped() + adam_lr.skipped();
    return result;
}

void recompute_texels(const Scene& scene, RgbImage& texture, const std::vector<int>& texels) {
    // Whole fixed-size blocks are evaluated; only requested texels are written.
    constexpr int kChunk = 4096;
    const int w = texture.width;
    const int h = texture.height;
    const int total = w * h;
    std::vector<int> blocks;
    for (int t : texels) {
        if (t < 0 || t >= total) {
            throw Error(fmt::format("texel index {} out of range", t));
        }
        if (blocks.empty() || blocks.back() != t / kChunk) {
            blocks.push_back(t / kChunk);
        }
    }
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    std::vector<std::uint8_t> wanted(total, 0);
    for (int t : texels) {
        wanted[t] = 1;
    }
    parallel_for(0, static_cast<int>(blocks.size()), [&](int k) {
        const int b = blocks[k] * kChunk;
        const int e = std::min(total, b + kChunk);
        MatrixXd uv(2, e - b);
        for (int t = b; t < e; ++t) {
            uv(0, t - b) = w > 1 ? double(t % w) / (w - 1) : 0.0;
            uv(1, t - b) = h > 1 ? double(t / w) / (h - 1) : 0.0;
        }
        const MatrixXd y = scene.texture_net.forward(PosEnc::encode(uv));
        for (int t = b; t < e; ++t) {
            if (wanted[t]) {
                const auto col = y.col(t - b);
                texture.pixels[t] = Vec3(sigmoid(col[0]), sigmoid(col[1]), sigmoid(col[2]));
            }
        }
    });
}

RgbImage bake_texture(const Scene& scene) {
    const int res = scene.config.texture_resolution;
    RgbImage tex(res, res);
    std::vector<int> all(std::size_t(res) * res);
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = static_cast<int>(i);
    }
    recompute_texels(scene, tex, all);
    return tex;
}

void bake_inference_caches(Scene& scene) {
    scene.texture = std::make_shared<const RgbImage>(bake_texture(scene));
    bake_environment(scene);
}

void write_loss_csv(const std::vector<double>& loss, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
    os << "iteration,loss\n";
    for (std::size_t i = 0; i < loss.size(); ++i) {
        os << fmt::format("{},{:.17g}\n", i + 1, loss[i]);
    }
    if (!os) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
}

} // namespace decalforge
