// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "decalforge/checkpoint.hpp"
#include "decalforge/dataset.hpp"
#include "decalforge/editor.hpp"
#include "decalforge/metrics.hpp"
#include "decalforge/shading.hpp"
#include "decalforge/studio.hpp"
#include "decalforge/trainer.hpp"

namespace decalforge::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
    bool json_output = false;

    // train
    std::string data;
    std::string mesh;
    std::string region;
    int seed_face = -1;
    int region_faces = 0;
    std::string cache_dir;
    std::string loss_csv;
    TrainConfig train;
    int hidden = 256;
    int env_levels = 6;
    bool no_lr_net = false;

    // shared
    std::string checkpoint;
    std::string out;

    // render
    std::string cam;
    std::string target;
    int width = 512;
    int height = 512;
    double exposure = 1.0;
    bool live = false;

    // edit
    std::string decal;

    // eval
    std::string split = "test";
    int rvw_pairs = 10000;
    std::uint64_t rvw_seed = 1;
    std::string renders;

    // serve
    std::string host = "127.0.0.1";
    int port = 8080;
};

std::vector<double> parse_list(const std::string& text, std::size_t n, const char* what) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != item.size() || item.empty() || !std::isfinite(v)) {
            throw Error(fmt::format("{} expects {} comma-separated numbers, got '{}'", what, n, text));
        }
        vals.push_back(v);
    }
    if (vals.size() != n) {
        throw Error(fmt::format("{} expects {} comma-separated numbers, got '{}'", what, n, text));
    }
    return vals;
}

std::string psnr_text(double db) { return std::isinf(db) ? "inf" : fmt::format("{:.4f}", db); }

json psnr_json(double db) { return std::isinf(db) ? json("inf") : json(db); }

/// Removes files created by a failed subcommand.
class OutputGuard {
public:
    void track(const std::string& path) {
        if (!path.empty() && !fs::exists(path)) {
            paths_.push_back(path);
        }
    }
    void commit() { paths_.clear(); }
    ~OutputGuard() {
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    }

private:
    std::vector<std::string> paths_;
};

/// Writes to a temporary sibling first so an existing file survives failures.
template <typename Fn>
void write_atomically(const std::string& path, Fn&& fn) {
    const std::string tmp = path + ".partial";
    try {
        fn(tmp);
        fs::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

void require_file(const std::string& path, const char* what) {
    if (path.empty() || !fs::is_regular_file(path)) {
        throw IoError(fmt::format("{} '{}' does not exist", what, path));
    }
}

void require_dir(const std::string& path, const char* what) {
    if (path.empty() || !fs::is_directory(path)) {
        throw IoError(fmt::format("{} '{}' is not a directory", what, path));
    }
}

/// Quantizes a linear image through 8-bit sRGB, as stored on disk.
RgbImage display_values(const RgbImage& linear) {
    const Rgba8Image q = to_srgb8(linear);
    RgbImage out(linear.width, linear.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = Vec3(q.data[i * 4], q.data[i * 4 + 1], q.data[i * 4 + 2]) / 255.0;
    }
    return out;
}

int cmd_train(const Options& o, std::ostream& out) {
    require_dir(o.data, "dataset root");
    require_file(o.mesh, "mesh");
    o.train.validate();
    OutputGuard guard;
    guard.track(o.out);
    guard.track(o.loss_csv);

    const Dataset all = ingest(o.data);
    Dataset train_views = all.subset("train");
    if (train_views.size() == 0) {
        throw Error(fmt::format("dataset '{}' has no training views", o.data));
    }
    TriMesh mesh = load_mesh(o.mesh);
    if (!o.region.empty()) {
        require_file(o.region, "region");
        mesh = load_region(mesh, o.region);
    } else if (o.seed_face >= 0) {
        mesh = select_region(mesh, o.seed_face, o.region_faces > 0 ? o.region_faces : mesh.num_faces());
    }

    SceneConfig sc;
    sc.texture_resolution = o.train.texture_resolution;
    sc.env_width = o.train.env_width;
    sc.env_height = o.train.env_height;
    sc.env_levels = o.env_levels;
    sc.hidden = o.hidden;
    sc.use_lr_net = !o.no_lr_net;
    sc.seed = o.train.seed;
    Scene scene = make_scene(mesh, sc);

    std::optional<fs::path> cache;
    if (!o.cache_dir.empty()) {
        fs::create_directories(o.cache_dir);
        cache = o.cache_dir;
    }
    const TrainingSet set = build_training_set(scene.mesh, train_views, cache);
    out << fmt::format("training on {} views, {} pixels\n", train_views.size(), set.samples.size());
    TrainConfig tc = o.train;
    tc.on_log = [&out](int it, double loss) { out << fmt::format("iter {:>6}  loss {:.6e}\n", it, loss); };
    const TrainResult result = train(scene, set, tc);
    bake_inference_caches(scene);
    if (!o.loss_csv.empty()) {
        write_loss_csv(result.loss, o.loss_csv);
    }
    write_atomically(o.out, [&](const std::string& p) { save_checkpoint(scene, p); });
    out << fmt::format("saved {}\n", o.out);
    guard.commit();
    return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out) {
    require_file(o.checkpoint, "checkpoint");
    const Scene scene = load_checkpoint(o.checkpoint);
    const auto cam = parse_list(o.cam, 4, "--cam");
    Vec3 target = scene_center(scene);
    if (!o.target.empty()) {
        const auto t = parse_list(o.target, 3, "--target");
        target = Vec3(t[0], t[1], t[2]);
    }
    if (!(o.exposure > 0)) {
        throw Error("--exposure must be positive");
    }
    const Camera c = Camera::orbit(target, cam[0], cam[1], cam[2], cam[3], o.width, o.height);
    const RgbImage img = render(scene, c, o.live ? AlbedoSource::Network : AlbedoSource::Texture);
    write_atomically(o.out, [&](const std::string& p) { write_png(to_srgb8(img, o.exposure), p); });
    out << fmt::format("wrote {}\n", o.out);
    return kExitOk;
}

int cmd_edit(const Options& o, std::ostream& out) {
    require_file(o.checkpoint, "checkpoint");
    require_file(o.decal, "decal spec");
    Scene scene = load_checkpoint(o.checkpoint);
    std::ifstream is(o.decal);
    json spec;
    try {
        is >> spec;
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}: {}", o.decal, e.what()));
    }
    auto quad = [&]() {
        if (!spec.contains("anchors") || !spec["anchors"].is_array() || spec["anchors"].size() != 4) {
            throw ParseError(fmt::format("{}: anchors must be four [u,v] pairs", o.decal));
        }
        Quad q;
        for (int k = 0; k < 4; ++k) {
            q[k] = Vec2(spec["anchors"][k].at(0).get<double>(), spec["anchors"][k].at(1).get<double>());
        }
        return q;
    };
    EditReceipt r;
    std::string kind;
    if (spec.contains("image")) {
        fs::path img = spec["image"].get<std::string>();
        if (img.is_relative()) {
            img = fs::path(o.decal).parent_path() / img;
        }
        DecalSpec d;
        d.image = read_png(img);
        d.anchors = quad();
        if (spec.contains("roughness")) {
            d.roughness_override = spec["roughness"].get<double>();
        }
        r = apply_decal(scene, d);
        kind = "decal";
    } else if (spec.contains("revert")) {
        r = revert_edit(scene, spec["revert"].get<int>());
        kind = "revert";
    } else if (spec.contains("roughness")) {
        r = set_region_roughness(scene, quad(), spec["roughness"].get<double>());
        kind = "roughness";
    } else {
        throw ParseError(fmt::format("{}: expected 'image', 'roughness' or 'revert'", o.decal));
    }
    const std::string dst = o.out.empty() ? o.checkpoint : o.out;
    write_atomically(dst, [&](const std::string& p) { save_checkpoint(scene, p); });
    if (o.json_output) {
        out << json{{"id", r.id}, {"kind", kind}, {"texels", r.texels}, {"vertices", r.vertices}}.dump() << '\n';
    } else {
        out << fmt::format("{} edit {}: {} texels, {} vertices -> {}\n", kind, r.id, r.texels, r.vertices, dst);
    }
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    require_file(o.checkpoint, "checkpoint");
    require_dir(o.data, "dataset root");
    const Scene scene = load_checkpoint(o.checkpoint);
    const Dataset views = ingest(o.data).subset(o.split);
    if (views.size() == 0) {
        throw Error(fmt::format("dataset '{}' has no '{}' views", o.data, o.split));
    }
    OutputGuard guard;
    if (!o.renders.empty()) {
        guard.track(o.renders);
        fs::create_directories(o.renders);
    }
    json per_view = json::array();
    std::vector<std::string> lines;
    double sum_mse = 0.0;
    double sum_psnr = 0.0;
    for (const auto& v : views.views) {
        const RgbImage img = render(scene, v.camera, AlbedoSource::Texture);
        const RgbImage a = display_values(img);
        const RgbImage b = display_values(v.image);
        const double db = psnr(a, b);
        sum_mse += mean_squared_error(a, b);
        sum_psnr += db;
        per_view.push_back({{"view", v.name}, {"psnr", psnr_json(db)}});
        lines.push_back(fmt::format("{:<32}{}", v.name, psnr_text(db)));
        if (!o.renders.empty()) {
            write_png(to_srgb8(img), fs::path(o.renders) / (fs::path(v.name).filename().string() + ".png"));
        }
    }
    const double mean_psnr = sum_psnr / views.size();
    json report{{"split", o.split}, {"views", per_view}, {"mean_psnr", psnr_json(mean_psnr)},
                {"mean_mse", sum_mse / views.size()}};
    std::optional<RvwReport> rvw_report;
    if (o.rvw_pairs > 0 && scene.mesh.has_uv_area()) {
        rvw_report = rvw(scene.mesh, scene.chart, o.rvw_pairs, o.rvw_seed);
        report["rvw"] = json::parse(to_json(*rvw_report));
    }
    if (o.json_output) {
        out << report.dump(2) << '\n';
    } else {
        for (const auto& l : lines) {
            out << l << '\n';
        }
        out << fmt::format("{:<32}{}\n", "mean psnr", psnr_text(mean_psnr));
        if (rvw_report) {
            out << to_text(*rvw_report);
        }
    }
    guard.commit();
    return kExitOk;
}

int cmd_bake(const Options& o, std::ostream& out) {
    require_file(o.checkpoint, "checkpoint");
    Scene scene = load_checkpoint(o.checkpoint);
    const std::vector<EditRecord> log = scene.edits;
    scene.edits.clear();
    scene.roughness_override.assign(scene.num_vertices(), std::nullopt);
    bake_inference_caches(scene);
    replay_edits(scene, log);
    const std::string dst = o.out.empty() ? o.checkpoint : o.out;
    write_atomically(dst, [&](const std::string& p) { save_checkpoint(scene, p); });
    out << fmt::format("baked {} ({} edits replayed)\n", dst, log.size());
    return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out) {
    StudioOptions so;
    so.host = o.host;
    so.port = o.port;
    so.exposure = o.exposure;
    StudioService service(so);
    if (!o.checkpoint.empty()) {
        require_file(o.checkpoint, "checkpoint");
        service.set_scene(load_checkpoint(o.checkpoint));
    }
    out << fmt::format("serving on http://{}:{}\n", o.host, o.port) << std::flush;
    service.run();
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"decalforge: appearance decomposition and decal editing"};
    app.name("decalforge");
    app.set_config("--config", "", "TOML/INI config file; command line flags take precedence");
    app.add_flag("--json", o.json_output, "Machine-readable output");
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "Ingest, parameterize, train, bake and save a checkpoint");
    train->add_option("--data", o.data, "Dataset root (transforms_*.json)")->required();
    train->add_option("--mesh", o.mesh, "OBJ mesh")->required();
    train->add_option("--region", o.region, "UV-area face list (one index per line)");
    train->add_option("--seed-face", o.seed_face, "Flood-fill seed face for the UV area (-1 = none)")
        ->capture_default_str();
    train->add_option("--region-faces", o.region_faces, "Face budget of the flood fill (0 = whole component)")
        ->capture_default_str();
    train->add_option("--out", o.out, "Output checkpoint")->required();
    train->add_option("--iterations", o.train.iterations, "Optimizer iterations")->capture_default_str();
    train->add_option("--batch", o.train.batch_size, "Pixels per iteration")->capture_default_str();
    train->add_option("--lr-net", o.train.lr_net, "Network learning rate")->capture_default_str();
    train->add_option("--lr-features", o.train.lr_features, "Vertex feature and environment learning rate")
        ->capture_default_str();
    train->add_option("--texture-res", o.train.texture_resolution, "Baked texture resolution")->capture_default_str();
    train->add_option("--env-width", o.train.env_width, "Environment map width")->capture_default_str();
    train->add_option("--env-height", o.train.env_height, "Environment map height")->capture_default_str();
    train->add_option("--env-levels", o.env_levels, "Prefiltered mip levels")->capture_default_str();
    train->add_option("--train-spp", o.train.prefilter_spp, "Prefilter samples per texel while training")
        ->capture_default_str();
    train->add_option("--hidden", o.hidden, "MLP hidden width")->capture_default_str();
    train->add_flag("--no-lr-net", o.no_lr_net, "Disable the local-reflection network");
    train->add_option("--seed", o.train.seed, "Random seed")->capture_default_str();
    train->add_option("--log-every", o.train.log_every, "Loss print interval (0 = silent)")->capture_default_str();
    train->add_option("--loss-csv", o.loss_csv, "Write per-iteration loss as CSV");
    train->add_option("--cache-dir", o.cache_dir, "Fragment cache directory");

    auto* render_cmd = app.add_subcommand("render", "Render a checkpoint from an orbit camera");
    render_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    render_cmd->add_option("--cam", o.cam, "azimuth,elevation,radius,fov_x (degrees)")->required();
    render_cmd->add_option("--target", o.target, "Orbit center x,y,z (default: bounding-box center)");
    render_cmd->add_option("--width", o.width, "Image width")->capture_default_str()->check(CLI::PositiveNumber);
    render_cmd->add_option("--height", o.height, "Image height")->capture_default_str()->check(CLI::PositiveNumber);
    render_cmd->add_option("--exposure", o.exposure, "Linear exposure before sRGB")->capture_default_str();
    render_cmd->add_flag("--live", o.live, "Evaluate the texture network instead of the baked map");
    render_cmd->add_option("--out", o.out, "Output PNG")->required();

    auto* edit = app.add_subcommand("edit", "Apply a decal, roughness or revert edit");
    edit->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    edit->add_option("--decal", o.decal,
                     "Edit JSON: {\"image\", \"anchors\", \"roughness\"?} | {\"anchors\", \"roughness\"} | "
                     "{\"revert\": id}")
        ->required();
    edit->add_option("--out", o.out, "Output checkpoint (default: overwrite input)");

    auto* eval = app.add_subcommand("eval", "PSNR over a dataset split plus the RVW report");
    eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    eval->add_option("--data", o.data, "Dataset root")->required();
    eval->add_option("--split", o.split, "Split to evaluate")->capture_default_str();
    eval->add_option("--rvw-pairs", o.rvw_pairs, "RVW vertex pairs (0 disables)")->capture_default_str();
    eval->add_option("--rvw-seed", o.rvw_seed, "RVW sampling seed")->capture_default_str();
    eval->add_option("--renders", o.renders, "Directory for rendered views");

    auto* bake = app.add_subcommand("bake", "Rebake texture and environment caches, replaying edits");
    bake->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    bake->add_option("--out", o.out, "Output checkpoint (default: overwrite input)");

    auto* serve = app.add_subcommand("serve", "Start the studio HTTP service");
    serve->add_option("--checkpoint", o.checkpoint, "Checkpoint to load");
    serve->add_option("--host", o.host, "Bind address")->capture_default_str();
    serve->add_option("--port", o.port, "Port")->capture_default_str();
    serve->add_option("--exposure", o.exposure, "Display exposure")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    // Effective configuration in the --config format.
    err << "# config\n" << fmt::format("json={}\n", o.json_output);
    for (const auto* sub : app.get_subcommands()) {
        err << '[' << sub->get_name() << "]\n" << sub->config_to_str(true, false);
    }
    try {
        if (train->parsed()) {
            return cmd_train(o, out);
        }
        if (render_cmd->parsed()) {
            return cmd_render(o, out);
        }
        if (edit->parsed()) {
            return cmd_edit(o, out);
        }
        if (eval->parsed()) {
            return cmd_eval(o, out);
        }
        if (bake->parsed()) {
            return cmd_bake(o, out);
        }
        if (serve->parsed()) {
            return cmd_serve(o, out);
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << msg << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace decalforge::cli
