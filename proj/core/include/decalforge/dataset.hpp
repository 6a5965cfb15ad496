// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "decalforge/camera.hpp"
#include "decalforge/image.hpp"

namespace decalforge {

struct View {
    std::string name;
    std::string split; // "train", "val" or "test"
    Camera camera;
    RgbImage image;            // linear, composited over black
    std::vector<double> alpha; // per pixel, empty when the source had none
};

struct Dataset {
    std::vector<View> views;

    int size() const { return static_cast<int>(views.size()); }
    /// Views tagged with `split`.
    Dataset subset(const std::string& split) const;
};

/// Reads `transforms_{train,val,test}.json` (or `transforms.json`) under
/// `root` using the synthetic-dataset convention: per-frame `file_path` and
/// 4x4 `transform_matrix`, shared `camera_angle_x`. Images are decoded,
/// converted from sRGB to linear and composited over black.
Dataset ingest(const std::filesystem::path& root);

/// Writes views as sRGB PNGs plus one transforms file per split.
void write_dataset(const Dataset& data, const std::filesystem::path& root);

} // namespace decalforge
