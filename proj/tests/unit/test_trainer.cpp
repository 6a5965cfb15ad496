// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "decalforge/synthetic.hpp"
#include "decalforge/trainer.hpp"
#include "test_util.hpp"

namespace decalforge {
namespace {

using testing::TempDir;

/// Two views of a randomized grid scene, rendered through its network albedo.
Dataset toy_dataset() {
    const Scene truth = testing::small_scene(true, 9);
    std::vector<Camera> cams = {testing::grid_camera(20),
                                Camera::look_at(Vec3(0.2, 0.7, 1.5), Vec3(0.5, 0.5, 0), Vec3(0, 1, 0), 0.9, 20, 20)};
    return synthetic::render_dataset(truth, cams, "train", AlbedoSource::Network);
}

TrainConfig tiny_config(int iterations) {
    TrainConfig c;
    c.iterations = iterations;
    c.batch_size = 64;
    c.lr_net = 1e-3;
    c.lr_features = 1e-2;
    c.prefilter_spp = 8;
    return c;
}

Scene fresh_scene() { return make_scene(testing::grid_with_area(), testing::small_config()); }

TEST(TrainingSet, SkipsUncoveredAndTransparentPixels) {
    Dataset d = toy_dataset();
    const TriMesh mesh = testing::grid_with_area();
    const TrainingSet all = build_training_set(mesh, d);
    EXPECT_EQ(all.num_views, 2);
    int covered = 0;
    for (const View& v : d.views) {
        covered += static_cast<int>(rasterize(mesh, v.camera).fragments().size());
    }
    EXPECT_EQ(static_cast<int>(all.samples.size()), covered);
    d.views[0].alpha.assign(20 * 20, 1.0);
    d.views[0].alpha[10 * 20 + 10] = 0.0;
    const TrainingSet fewer = build_training_set(mesh, d);
    EXPECT_EQ(fewer.samples.size() + 1, all.samples.size());
    for (const auto& s : all.samples) {
        EXPECT_EQ(s.target, d.views[s.view].image.at(s.frag.row, s.frag.col));
    }
}

TEST(TrainingSet, CacheDirGivesSameSamples) {
    TempDir dir;
    const Dataset d = toy_dataset();
    const TriMesh mesh = testing::grid_with_area();
    const TrainingSet a = build_training_set(mesh, d);
    const TrainingSet b = build_training_set(mesh, d, dir.path());
    const TrainingSet c = build_training_set(mesh, d, dir.path());
    ASSERT_EQ(a.samples.size(), b.samples.size());
    ASSERT_EQ(a.samples.size(), c.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].frag.bary, c.samples[i].frag.bary);
        EXPECT_EQ(a.samples[i].target, c.samples[i].target);
    }
}

TEST(Train, ZeroIterationsLeaveSceneUnchanged) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene s = fresh_scene();
    const Scene before = s;
    const TrainResult r = train(s, set, tiny_config(0));
    EXPECT_TRUE(r.loss.empty());
    EXPECT_EQ(s.features, before.features);
    EXPECT_EQ(s.texture_net.params(), before.texture_net.params());
    EXPECT_EQ(s.lr_net.params(), before.lr_net.params());
    EXPECT_EQ(s.env.raw().pixels, before.env.raw().pixels);
}

TEST(Train, DeterministicForFixedSeed) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene a = fresh_scene();
    Scene b = fresh_scene();
    const TrainResult ra = train(a, set, tiny_config(15));
    const TrainResult rb = train(b, set, tiny_config(15));
    EXPECT_EQ(ra.loss, rb.loss);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.texture_net.params(), b.texture_net.params());
    EXPECT_EQ(a.env.raw().pixels, b.env.raw().pixels);
    Scene c = fresh_scene();
    TrainConfig other = tiny_config(15);
    other.seed = 2;
    EXPECT_NE(train(c, set, other).loss, ra.loss);
}

TEST(Train, LossDecreases) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene s = fresh_scene();
    const TrainResult r = train(s, set, tiny_config(300));
    ASSERT_EQ(r.loss.size(), 300u);
    double head = 0.0;
    double tail = 0.0;
    for (int i = 0; i < 30; ++i) {
        head += r.loss[i];
        tail += r.loss[270 + i];
    }
    EXPECT_LT(tail, 0.5 * head);
    EXPECT_EQ(r.skipped_steps, 0);
}

TEST(Train, ZeroFeatureRateFreezesFeaturesAndEnvironment) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene s = fresh_scene();
    const Scene before = s;
    TrainConfig c = tiny_config(10);
    c.lr_features = 0.0;
    train(s, set, c);
    EXPECT_EQ(s.features, before.features);
    EXPECT_EQ(s.env.raw().pixels, before.env.raw().pixels);
    EXPECT_NE(s.texture_net.params(), before.texture_net.params());
}

TEST(Train, LogsAtRequestedCadence) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene s = fresh_scene();
    TrainConfig c = tiny_config(10);
    c.log_every = 4;
    std::vector<int> seen;
    c.on_log = [&](int it, double loss) {
        seen.push_back(it);
        EXPECT_GT(loss, 0.0);
    };
    train(s, set, c);
    EXPECT_EQ(seen, (std::vector<int>{1, 4, 8}));
}

TEST(Train, NonFiniteLossThrows) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene s = fresh_scene();
    s.features.setConstant(std::numeric_limits<double>::quiet_NaN());
    try {
        train(s, set, tiny_config(3));
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
    }
}

TEST(Train, RejectsBadConfig) {
    const TrainingSet set = build_training_set(testing::grid_with_area(), toy_dataset());
    Scene s = fresh_scene();
    TrainConfig c = tiny_config(3);
    c.batch_size = 0;
    EXPECT_THROW(train(s, set, c), Error);
    c = tiny_config(3);
    c.lr_net = -1.0;
    EXPECT_THROW(train(s, set, c), Error);
    EXPECT_THROW(train(s, TrainingSet{}, tiny_config(3)), Error);
}

TEST(Bake, TexelFormula) {
    Scene s = testing::small_scene(false);
    const RgbImage tex = bake_texture(s);
    const int n = s.config.texture_resolution;
    ASSERT_EQ(tex.width, n);
    ASSERT_EQ(tex.height, n);
    for (int j = 0; j < n; j += 5) {
        for (int i = 0; i < n; i += 3) {
            VectorXd uv(2);
            uv << double(i) / (n - 1), double(j) / (n - 1);
            const VectorXd y = s.texture_net.forward(PosEnc::encode(uv));
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(tex.at(j, i)[c], 1.0 / (1.0 + std::exp(-y[c])), 1e-14);
            }
        }
    }
}

TEST(Bake, TwiceIsBitIdentical) {
    Scene a = testing::small_scene(false);
    Scene b = a;
    bake_inference_caches(a);
    bake_inference_caches(b);
    EXPECT_EQ(a.texture->pixels, b.texture->pixels);
    const Camera cam = testing::grid_camera(16);
    EXPECT_EQ(render(a, cam).pixels, render(b, cam).pixels);
}

TEST(Bake, RecomputeOnlyWritesRequestedTexels) {
    Scene s = testing::small_scene();
    RgbImage tex(s.config.texture_resolution, s.config.texture_resolution, Vec3::Constant(-1.0));
    recompute_texels(s, tex, {0, 7, 1023});
    int written = 0;
    for (std::size_t t = 0; t < tex.pixels.size(); ++t) {
        if (tex.pixels[t] != Vec3::Constant(-1.0)) {
            ++written;
            EXPECT_EQ(tex.pixels[t], s.texture->pixels[t]);
        }
    }
    EXPECT_EQ(written, 3);
    EXPECT_THROW(recompute_texels(s, tex, {-1}), Error);
    EXPECT_THROW(recompute_texels(s, tex, {32 * 32}), Error);
}

TEST(LossCsv, Format) {
    TempDir dir;
    write_loss_csv({0.5, 0.25}, dir / "loss.csv");
    std::ifstream is(dir / "loss.csv");
    std::string l1, l2, l3, extra;
    std::getline(is, l1);
    std::getline(is, l2);
    std::getline(is, l3);
    EXPECT_EQ(l1, "iteration,loss");
    EXPECT_EQ(l2, "1,0.5");
    EXPECT_EQ(l3, "2,0.25");
    EXPECT_FALSE(std::getline(is, extra));
    EXPECT_THROW(write_loss_csv({1.0}, dir / "no/such/dir/loss.csv"), IoError);
}

} // namespace
} // namespace decalforge
