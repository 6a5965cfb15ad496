// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "decalforge/dataset.hpp"
#include "decalforge/raster.hpp"
#include "decalforge/scene.hpp"

namespace decalforge {

struct TrainConfig {
    int iterations = 20000;
    int batch_size = 4096;
    double lr_net = 5e-4;
    double lr_features = 5e-3; // vertex features and raw environment texels
    int texture_resolution = 1024;
    int env_width = 256;
    int env_height = 128;
    /// Samples per texel when re-prefiltering between steps.
    int prefilter_spp = 32;
    std::uint64_t seed = 1;
    /// Called every `log_every` iterations with (iteration, loss).
    int log_every = 0;
    std::function<void(int, double)> on_log;

    void validate() const;
};

/// Training pixels: cached fragments of every view plus ground truth.
struct TrainingSet {
    struct Sample {
        int view = 0;
        Fragment frag;
        Vec3 target = Vec3::Zero();
    };
    std::vector<Sample> samples;
    int num_views = 0;
};

/// Rasterizes every view (through `cache_dir` when given) and keeps covered
/// pixels. Pixels with zero alpha are excluded.
TrainingSet build_training_set(const TriMesh& mesh, const Dataset& data,
                               const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

struct TrainResult {
    std::vector<double> loss; // one entry per iteration
    std::int64_t skipped_steps = 0;
};

/// Optimizes every learnable of `scene` against the training pixels with
/// MSE and Adam. Throws NumericError on a non-finite loss. Leaves the
/// environment prefiltered at training quality; call bake_inference_caches
/// afterwards.
TrainResult train(Scene& scene, const TrainingSet& set, const TrainConfig& config);

/// Evaluates the texture network on the full UV grid:
/// texel (row j, col i) = sigmoid(F_t(gamma(i / (W-1), j / (H-1)))).
RgbImage bake_texture(const Scene& scene);

/// Recomputes the given texels (row-major indices) of `texture` from F_t.
void recompute_texels(const Scene& scene, RgbImage& texture, const std::vector<int>& texels);

/// Bakes the albedo texture and re-prefilters the environment at inference
/// quality.
void bake_inference_caches(Scene& scene);

void write_loss_csv(const std::vector<double>& loss, const std::filesystem::path& path);

} // namespace decalforge
