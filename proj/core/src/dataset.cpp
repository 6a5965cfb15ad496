// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/dataset.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

namespace decalforge {

using nlohmann::json;

Dataset Dataset::subset(const std::string& split) const {
    Dataset out;
    for (const auto& v : views) {
        if (v.split == split) {
            out.views.push_back(v);
        }
    }
    return out;
}

namespace {

void ingest_file(const std::filesystem::path& root, const std::filesystem::path& json_path, const std::string& split,
                 Dataset& out) {
    std::ifstream is(json_path);
    if (!is) {
        throw IoError(fmt::format("cannot read {}", json_path.string()));
    }
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}: {}", json_path.string(), e.what()));
    }
    if (!doc.contains("camera_angle_x") || !doc.contains("frames")) {
        throw ParseError(fmt::format("{}: expected camera_angle_x and frames", json_path.string()));
    }
    const double fov_x = doc["camera_angle_x"].get<double>();
    int width = 0;
    int height = 0;
    for (const auto& frame : doc["frames"]) {
        std::string rel = frame.at("file_path").get<std::string>();
        std::filesystem::path img_path = root / rel;
        if (!img_path.has_extension() || img_path.extension() != ".png") {
            img_path += ".png";
        }
        if (!std::filesystem::exists(img_path)) {
            throw IoError(fmt::format("missing image {}", img_path.string()));
        }
        Rgba8Image rgba;
        try {
            rgba = read_png(img_path);
        } catch (const IoError& e) {
            throw IoError(fmt::format("unreadable image {}: {}", img_path.string(), e.what()));
        }
        if (width == 0 && out.views.empty()) {
            width = rgba.width;
            height = rgba.height;
        } else if (!out.views.empty()) {
            width = out.views.front().image.width;
            height = out.views.front().image.height;
        }
        if (rgba.width != width || rgba.height != height) {
            throw IoError(fmt::format("{} is {}x{}, expected {}x{}", img_path.string(), rgba.width, rgba.height,
                                      width, height));
        }
        Eigen::Matrix4d m;
        const auto& tm = frame.at("transform_matrix");
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                m(r, c) = tm.at(r).at(c).get<double>();
            }
        }
        if (!m.allFinite()) {
            throw ParseError(fmt::format("{}: non-finite camera for {}", json_path.string(), rel));
        }
        View v;
        v.name = rel;
        v.split = split;
        v.camera = Camera::from_transform(m, fov_x, rgba.width, rgba.height);
        v.image = to_linear(rgba);
        v.alpha.resize(std::size_t(rgba.width) * rgba.height);
        bool any_transparent = false;
        for (std::size_t i = 0; i < v.alpha.size(); ++i) {
            v.alpha[i] = rgba.data[i * 4 + 3] / 255.0;
            any_transparent |= rgba.data[i * 4 + 3] != 255;
        }
        if (!any_transparent) {
            v.alpha.clear();
        }
        out.views.push_back(std::move(v));
    }
}

} // namespace

Dataset ingest(const std::filesystem::path& root) {
    Dataset out;
    bool found = false;
    for (const std::string split : {"train", "val", "test"}) {
        const auto p = root / fmt::format("transforms_{}.json", split);
        if (std::filesystem::exists(p)) {
            ingest_file(root, p, split, out);
            found = true;
        }
    }
    if (!found) {
        const auto p = root / "transforms.json";
        if (!std::filesystem::exists(p)) {
            throw IoError(fmt::format("no transforms_*.json or transforms.json in {}", root.string()));
        }
        ingest_file(root, p, "train", out);
    }
    return out;
}

void write_dataset(const Dataset& data, const std::filesystem::path& root) {
    std::map<std::string, json> docs;
    for (const auto& v : data.views) {
        auto& doc = docs[v.split];
        if (doc.is_null()) {
            doc["camera_angle_x"] = v.camera.fov_x();
            doc["frames"] = json::array();
        }
        std::filesystem::path rel = std::filesystem::path(v.split) / v.name;
        rel.replace_extension(".png");
        std::filesystem::create_directories((root / rel).parent_path());
        Rgba8Image img = to_srgb8(v.image);
        if (!v.alpha.empty()) {
            for (std::size_t i = 0; i < v.alpha.size(); ++i) {
                img.data[i * 4 + 3] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v.alpha[i], 0.0, 1.0)));
            }
        }
        write_png(img, root / rel);
        json frame;
        frame["file_path"] = "./" + rel.generic_string();
        const Eigen::Matrix4d m = v.camera.transform();
        json tm = json::array();
        for (int r = 0; r < 4; ++r) {
            tm.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
        }
        frame["transform_matrix"] = tm;
        doc["frames"].push_back(frame);
    }
    for (const auto& [split, doc] : docs) {
        std::ofstream os(root / fmt::format("transforms_{}.json", split));
        os << doc.dump(2) << '\n';
        if (!os) {
            throw IoError(fmt::format("cannot write transforms for split {}", split));
        }
    }
}

} // namespace decalforge
