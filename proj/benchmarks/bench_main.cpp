// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "decalforge/editor.hpp"
#include "decalforge/neural.hpp"
#include "decalforge/primitives.hpp"
#include "decalforge/shading.hpp"
#include "decalforge/synthetic.hpp"
#include "decalforge/trainer.hpp"
#include "decalforge/uv_param.hpp"

namespace decalforge {
namespace {

Scene bench_scene() {
    SceneConfig cfg;
    cfg.texture_resolution = 256;
    cfg.env_width = 64;
    cfg.env_height = 32;
    cfg.env_levels = 5;
    Scene s = make_scene(synthetic::sphere_on_plane(synthetic::SceneSpec{}), cfg);
    s.texture = std::make_shared<const RgbImage>(bake_texture(s));
    return s;
}

Camera bench_camera(int size) { return Camera::orbit(Vec3(0, 1, 0), 30.0, 30.0, 4.0, 45.0, size, size); }

void BM_Rasterize(benchmark::State& state) {
    const Scene s = bench_scene();
    const Camera cam = bench_camera(int(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize(s.mesh, cam));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Rasterize)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_MlpForward(benchmark::State& state) {
    const Mlp net = Mlp::kaiming(PosEnc::output_dim(2), 256, 3, 1);
    const MatrixXd x = MatrixXd::Random(net.input_dim(), state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(x));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_MlpForwardBackward(benchmark::State& state) {
    const Mlp net = Mlp::kaiming(PosEnc::output_dim(2), 256, 3, 1);
    const MatrixXd x = MatrixXd::Random(net.input_dim(), state.range(0));
    const MatrixXd dy = MatrixXd::Random(3, state.range(0));
    VectorXd g = VectorXd::Zero(net.num_params());
    Mlp::Cache cache;
    for (auto _ : state) {
        net.forward(x, &cache);
        benchmark::DoNotOptimize(net.backward(cache, dy, g));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ShadeBatch(benchmark::State& state) {
    const Scene s = bench_scene();
    std::vector<Fragment> frags = rasterize(s.mesh, bench_camera(128)).fragments();
    frags.resize(std::min<std::size_t>(frags.size(), state.range(0)));
    BatchShader shader;
    const std::vector<Vec3> dl(frags.size(), Vec3::Ones());
    SceneGrad grad = SceneGrad::zeros(s);
    for (auto _ : state) {
        shader.forward(s, frags, AlbedoSource::Network);
        shader.backward(s, dl, grad);
    }
    state.SetItemsProcessed(state.iterations() * frags.size());
}
BENCHMARK(BM_ShadeBatch)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Prefilter(benchmark::State& state) {
    const PrefilterOperator op = PrefilterOperator::build(64, 32, 5, 64);
    const RgbImage base = synthetic::sky_map(64, 32);
    for (auto _ : state) {
        benchmark::DoNotOptimize(op.apply(base));
    }
}
BENCHMARK(BM_Prefilter)->Unit(benchmark::kMillisecond);

void BM_Arap(benchmark::State& state) {
    const int n = int(state.range(0));
    const TriMesh m = primitives::spherical_cap(1.0, 1.0, n, n / 2);
    const TriMesh area = m.with_uv_area(std::vector<std::uint8_t>(m.num_faces(), 1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(parameterize(area));
    }
    state.SetItemsProcessed(state.iterations() * area.num_vertices());
}
BENCHMARK(BM_Arap)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ApplyDecal(benchmark::State& state) {
    Scene s = bench_scene();
    s.config.texture_resolution = 1024;
    s.texture = std::make_shared<const RgbImage>(bake_texture(s));
    const Rgba8Image decal = synthetic::checkerboard(256, 8);
    const Quad quad = {Vec2(0.2, 0.25), Vec2(0.8, 0.2), Vec2(0.85, 0.75), Vec2(0.15, 0.8)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_decal(s, {decal, quad, std::nullopt}));
    }
}
BENCHMARK(BM_ApplyDecal)->Unit(benchmark::kMillisecond);

} // namespace
} // namespace decalforge

BENCHMARK_MAIN();
