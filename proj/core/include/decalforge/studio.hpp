// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "decalforge/scene.hpp"

namespace decalforge {

struct StudioOptions {
    std::string host = "127.0.0.1";
    int port = 8080; // 0 picks a free port
    double exposure = 1.0;
    int max_dimension = 2048; // largest accepted render width/height
};

/// HTTP front end over one scene session.
///
///   GET  /render?cam=az,el,radius,fov&w=&h=   PNG (sRGB)
///   POST /pick        {"pixel":[col,row],"cam":"az,el,radius,fov","w":,"h":}
///   POST /decal       multipart field "image" (PNG), optional "roughness"
///   POST /revert      {"id":n}
///   POST /roughness   {"value":x, "anchors":[[u,v],...]?}
///   POST /anchors/clear
///   GET  /scene
///   POST /checkpoint/save {"path":...}
///   POST /checkpoint/load {"path":...}
class StudioService {
public:
    explicit StudioService(StudioOptions options = {});
    ~StudioService();
    StudioService(const StudioService&) = delete;
    StudioService& operator=(const StudioService&) = delete;

    void set_scene(Scene scene);
    bool has_scene() const;
    /// Copy of the session scene (throws StateError when none is loaded).
    Scene scene() const;

    /// Binds and serves on a background thread; returns the bound port.
    int start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace decalforge
