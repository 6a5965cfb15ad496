// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "decalforge/checkpoint.hpp"
#include "decalforge/synthetic.hpp"
#include "test_util.hpp"

namespace decalforge {
namespace {

using testing::TempDir;

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

std::vector<Camera> cameras(int n, int size) {
    std::vector<Camera> cams;
    for (int k = 0; k < n; ++k) {
        cams.push_back(Camera::orbit(Vec3(0.5, 0.5, 0), -20.0 + 20.0 * k, 10.0 * (k % 2), 1.6, 45, size, size));
    }
    return cams;
}

/// Mesh, region and a rendered dataset of the grid scene on disk.
class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const TriMesh mesh = testing::grid_with_area();
        save_mesh(mesh, dir / "grid.obj");
        save_region(mesh, dir / "grid.region");
        const Scene truth = testing::small_scene(true, 21);
        Dataset d = synthetic::render_dataset(truth, cameras(3, 24), "train");
        const Dataset t = synthetic::render_dataset(truth, cameras(2, 24), "test");
        d.views.insert(d.views.end(), t.views.begin(), t.views.end());
        write_dataset(d, dir / "data");
    }

    std::vector<std::string> train_args(const std::string& out, int iterations) const {
        return {"train", "--data", (dir / "data").string(), "--mesh", (dir / "grid.obj").string(), "--region",
                (dir / "grid.region").string(), "--out", out, "--iterations", std::to_string(iterations), "--batch",
                "64", "--texture-res", "32", "--env-width", "16", "--env-height", "8", "--env-levels", "3",
                "--hidden", "16", "--train-spp", "8"};
    }

    std::string trained() {
        const std::string ckpt = (dir / "model.dfs").string();
        const Outcome r = run_cli(train_args(ckpt, 5));
        EXPECT_EQ(r.code, 0) << r.err;
        return ckpt;
    }

    TempDir dir;
};

TEST(Cli, UsageErrorsExitTwo) {
    const Outcome bad = run_cli({"render", "--bogus"});
    EXPECT_EQ(bad.code, cli::kExitUsage);
    EXPECT_NE(bad.err.find("error"), std::string::npos);
    EXPECT_NE(bad.err.find("Usage"), std::string::npos);
    EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"render", "--checkpoint", "x"}).code, cli::kExitUsage); // missing --cam, --out
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitOneWithOneLine) {
    TempDir dir;
    const Outcome r = run_cli({"render", "--checkpoint", (dir / "none.dfs").string(), "--cam", "0,0,2,45", "--out",
                               (dir / "a.png").string()});
    EXPECT_EQ(r.code, cli::kExitFailure);
    const std::string last = r.err.substr(r.err.rfind("error:"));
    EXPECT_EQ(std::count(last.begin(), last.end(), '\n'), 1);
    EXPECT_NE(last.find("none.dfs"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "a.png"));
}

TEST_F(CliTest, TrainWritesCheckpointAndLoss) {
    std::vector<std::string> args = train_args((dir / "m.dfs").string(), 6);
    args.insert(args.end(), {"--loss-csv", (dir / "loss.csv").string(), "--log-every", "2"});
    const Outcome r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("training on 3 views"), std::string::npos);
    EXPECT_NE(r.out.find("iter      6"), std::string::npos);
    const Scene s = load_checkpoint(dir / "m.dfs");
    EXPECT_EQ(s.config.texture_resolution, 32);
    ASSERT_NE(s.texture, nullptr);
    const std::string csv = slurp(dir / "loss.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST_F(CliTest, FailedTrainLeavesNoOutputs) {
    std::vector<std::string> args = train_args((dir / "m.dfs").string(), 3);
    args[4] = (dir / "missing.obj").string();
    args.insert(args.end(), {"--loss-csv", (dir / "loss.csv").string()});
    EXPECT_EQ(run_cli(args).code, cli::kExitFailure);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.dfs"));
    EXPECT_FALSE(std::filesystem::exists(dir / "loss.csv"));
}

TEST_F(CliTest, EvalOnIdenticalPairsPrintsInfinity) {
    const std::string ckpt = trained();
    // Ground truth rendered from the checkpoint itself.
    write_dataset(synthetic::render_dataset(load_checkpoint(ckpt), cameras(2, 24), "test"), dir / "self");
    const Outcome r = run_cli({"eval", "--checkpoint", ckpt, "--data", (dir / "self").string(), "--rvw-pairs", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("mean psnr"), std::string::npos);
    EXPECT_NE(r.out.find("inf"), std::string::npos);
    EXPECT_NE(r.out.find("rvw"), std::string::npos);

    const Outcome j = run_cli({"--json", "eval", "--checkpoint", ckpt, "--data", (dir / "self").string(), "--rvw-pairs",
                               "200", "--renders", (dir / "renders").string()});
    ASSERT_EQ(j.code, 0) << j.err;
    const auto report = nlohmann::json::parse(j.out);
    EXPECT_EQ(report["mean_psnr"], "inf");
    EXPECT_EQ(report["views"].size(), 2u);
    EXPECT_EQ(report["rvw"]["n_pairs"], 200);
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir / "renders"), {}), 2);

    const Outcome other = run_cli({"eval", "--checkpoint", ckpt, "--data", (dir / "data").string()});
    ASSERT_EQ(other.code, 0);
    EXPECT_EQ(other.out.find("inf"), std::string::npos);
    EXPECT_EQ(run_cli({"eval", "--checkpoint", ckpt, "--data", (dir / "data").string(), "--split", "val"}).code,
              cli::kExitFailure);
}

TEST_F(CliTest, EditThenRenderShowsDecal) {
    const std::string ckpt = trained();
    const std::string before = (dir / "before.png").string();
    const std::string after = (dir / "after.png").string();
    ASSERT_EQ(run_cli({"render", "--checkpoint", ckpt, "--cam", "0,0,1.6,45", "--width", "48", "--height", "48",
                       "--out", before})
                  .code,
              0);
    Rgba8Image red(4, 4);
    for (int i = 0; i < 16; ++i) {
        red.data[i * 4] = 255;
        red.data[i * 4 + 3] = 255;
    }
    write_png(red, dir / "red.png");
    std::ofstream(dir / "decal.json")
        << R"({"image": "red.png", "anchors": [[0.1,0.1],[0.9,0.1],[0.9,0.9],[0.1,0.9]], "roughness": 0.3})";
    const Outcome e = run_cli({"--json", "edit", "--checkpoint", ckpt, "--decal", (dir / "decal.json").string(), "--out",
                               (dir / "edited.dfs").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto receipt = nlohmann::json::parse(e.out);
    EXPECT_EQ(receipt["kind"], "decal");
    EXPECT_GT(receipt["texels"].get<int>(), 0);
    ASSERT_EQ(run_cli({"render", "--checkpoint", (dir / "edited.dfs").string(), "--cam", "0,0,1.6,45", "--width", "48",
                       "--height", "48", "--out", after})
                  .code,
              0);
    const Rgba8Image a = read_png(before);
    const Rgba8Image b = read_png(after);
    // Centre pixel lies on the decal: red dominates after the edit.
    const std::uint8_t* pa = a.px(24, 24);
    const std::uint8_t* pb = b.px(24, 24);
    EXPECT_GT(pb[0] - (pb[1] + pb[2]) / 2, pa[0] - (pa[1] + pa[2]) / 2 + 20);
    EXPECT_GT(pb[0], 2 * std::max(pb[1], pb[2]));
    // Corner pixels show the floor outside the UV area and do not change.
    EXPECT_EQ(std::vector<std::uint8_t>(a.px(2, 2), a.px(2, 2) + 4), std::vector<std::uint8_t>(b.px(2, 2), b.px(2, 2) + 4));

    // Revert restores the original render.
    std::ofstream(dir / "revert.json") << R"({"revert": 1})";
    ASSERT_EQ(run_cli({"edit", "--checkpoint", (dir / "edited.dfs").string(), "--decal", (dir / "revert.json").string()})
                  .code,
              0);
    ASSERT_EQ(run_cli({"render", "--checkpoint", (dir / "edited.dfs").string(), "--cam", "0,0,1.6,45", "--width", "48",
                       "--height", "48", "--out", after})
                  .code,
              0);
    EXPECT_EQ(slurp(after), slurp(before));

    std::ofstream(dir / "bad.json") << R"({"anchors": []})";
    EXPECT_EQ(run_cli({"edit", "--checkpoint", ckpt, "--decal", (dir / "bad.json").string()}).code, cli::kExitFailure);
}

TEST_F(CliTest, BakeReplaysEditsAndIsStable) {
    const std::string ckpt = trained();
    std::ofstream(dir / "rough.json") << R"({"anchors": [[0.2,0.2],[0.8,0.2],[0.8,0.8],[0.2,0.8]], "roughness": 0.9})";
    ASSERT_EQ(run_cli({"edit", "--checkpoint", ckpt, "--decal", (dir / "rough.json").string()}).code, 0);
    const std::string original = slurp(ckpt);
    const Outcome b = run_cli({"bake", "--checkpoint", ckpt, "--out", (dir / "baked.dfs").string()});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_NE(b.out.find("1 edits replayed"), std::string::npos);
    EXPECT_EQ(slurp(dir / "baked.dfs"), original);
}

TEST_F(CliTest, ConfigFileWithFlagOverrides) {
    std::ofstream(dir / "cfg.toml") << "[train]\niterations = 7\nbatch = 64\n";
    std::vector<std::string> args = train_args((dir / "m.dfs").string(), 3);
    // Drop --iterations and --batch so the file supplies them.
    args.erase(args.begin() + 9, args.begin() + 13);
    std::vector<std::string> with_file = {"--config", (dir / "cfg.toml").string()};
    with_file.insert(with_file.end(), args.begin(), args.end());
    auto csv_lines = [&](std::vector<std::string> a) {
        a.insert(a.end(), {"--loss-csv", (dir / "loss.csv").string()});
        const Outcome r = run_cli(a);
        EXPECT_EQ(r.code, 0) << r.err;
        const std::string csv = slurp(dir / "loss.csv");
        return std::count(csv.begin(), csv.end(), '\n') - 1;
    };
    EXPECT_EQ(csv_lines(with_file), 7);
    std::vector<std::string> overridden = with_file;
    overridden.insert(overridden.end(), {"--iterations", "2"});
    EXPECT_EQ(csv_lines(overridden), 2);
}

TEST_F(CliTest, ConfigEchoReproducesRun) {
    std::vector<std::string> args = train_args((dir / "a.dfs").string(), 4);
    args.insert(args.end(), {"--loss-csv", (dir / "a.csv").string(), "--seed", "3"});
    const Outcome first = run_cli(args);
    ASSERT_EQ(first.code, 0) << first.err;
    const std::string echo = first.err.substr(first.err.find("# config\n") + 9);
    EXPECT_NE(echo.find("[train]"), std::string::npos) << echo;
    EXPECT_NE(echo.find("iterations=4"), std::string::npos);
    EXPECT_NE(echo.find("lr-net="), std::string::npos); // defaults are materialized
    EXPECT_EQ(echo.find("[render]"), std::string::npos);
    const std::string ckpt = slurp(dir / "a.dfs");
    const std::string csv = slurp(dir / "a.csv");
    std::filesystem::remove(dir / "a.dfs");
    std::filesystem::remove(dir / "a.csv");

    std::ofstream(dir / "echo.toml") << echo;
    const Outcome second = run_cli({"--config", (dir / "echo.toml").string(), "train"});
    ASSERT_EQ(second.code, 0) << second.err;
    EXPECT_EQ(second.err.substr(second.err.find("# config\n") + 9), echo);
    EXPECT_EQ(slurp(dir / "a.csv"), csv);
    EXPECT_EQ(slurp(dir / "a.dfs"), ckpt);
}

} // namespace
} // namespace decalforge
