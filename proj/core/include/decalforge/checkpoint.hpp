// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "decalforge/scene.hpp"

namespace decalforge {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serializes the full scene: config, mesh, chart, learnables, baked caches,
/// roughness overrides and the edit log.
std::string serialize_scene(const Scene& scene);
Scene deserialize_scene(const std::string& bytes);

void save_checkpoint(const Scene& scene, const std::filesystem::path& path);
Scene load_checkpoint(const std::filesystem::path& path);

} // namespace decalforge
