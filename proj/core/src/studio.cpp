// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/studio.hpp"

#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "decalforge/checkpoint.hpp"
#include "decalforge/editor.hpp"
#include "decalforge/raster.hpp"
#include "decalforge/shading.hpp"

namespace decalforge {

using nlohmann::json;

namespace {

struct HttpError {
    int status;
    std::string message;
};

[[noreturn]] void fail(int status, std::string message) { throw HttpError{status, std::move(message)}; }

struct OrbitParams {
    double azimuth = 0;
    double elevation = 0;
    double radius = 0;
    double fov = 0;
};

OrbitParams parse_cam(const std::string& text) {
    OrbitParams p;
    std::stringstream ss(text);
    std::string item;
    std::vector<double> vals;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (used != item.size()) {
                fail(400, fmt::format("bad cam value '{}'", item));
            }
        } catch (const std::logic_error&) {
            fail(400, fmt::format("bad cam value '{}'", item));
        }
    }
    if (vals.size() != 4) {
        fail(400, "cam must be azimuth,elevation,radius,fov");
    }
    p = {vals[0], vals[1], vals[2], vals[3]};
    if (!std::isfinite(p.azimuth) || !std::isfinite(p.elevation) || !(p.radius > 0) || !(p.fov > 0 && p.fov < 180)) {
        fail(400, "cam needs finite angles, radius > 0 and fov in (0, 180)");
    }
    return p;
}

int parse_dim(const std::string& text, const char* name, int max_dim) {
    int v = 0;
    try {
        std::size_t used = 0;
        v = std::stoi(text, &used);
        if (used != text.size()) {
            fail(400, fmt::format("bad {} '{}'", name, text));
        }
    } catch (const std::logic_error&) {
        fail(400, fmt::format("bad {} '{}'", name, text));
    }
    if (v <= 0 || v > max_dim) {
        fail(400, fmt::format("{} must be in [1, {}]", name, max_dim));
    }
    return v;
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) {
        return json::object();
    }
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        fail(400, fmt::format("invalid JSON: {}", e.what()));
    }
}

Quad parse_quad(const json& j) {
    if (!j.is_array() || j.size() != 4) {
        fail(400, "anchors must be an array of four [u,v] pairs");
    }
    Quad q;
    for (int k = 0; k < 4; ++k) {
        if (!j[k].is_array() || j[k].size() != 2 || !j[k][0].is_number() || !j[k][1].is_number()) {
            fail(400, "anchors must be an array of four [u,v] pairs");
        }
        q[k] = Vec2(j[k][0].get<double>(), j[k][1].get<double>());
    }
    return q;
}

json receipt_json(const char* kind, const EditReceipt& r) {
    return {{"id", r.id}, {"kind", kind}, {"texels", r.texels}, {"vertices", r.vertices}};
}

} // namespace

struct StudioService::Impl {
    StudioOptions options;
    httplib::Server server;
    std::thread thread;
    int bound_port = 0;

    mutable std::shared_mutex mu;
    std::optional<Scene> scene;
    std::vector<Vec2> anchors;
    std::optional<Quad> last_quad;
    Vec3 target = Vec3::Zero();

    Camera make_camera(const OrbitParams& p, int w, int h) const {
        return Camera::orbit(target, p.azimuth, p.elevation, p.radius, p.fov, w, h);
    }

    void reset(Scene s) {
        target = scene_center(s);
        scene = std::move(s);
        anchors.clear();
        last_quad.reset();
    }

    const Scene& require_scene() const {
        if (!scene) {
            fail(409, "no scene loaded");
        }
        return *scene;
    }

    void routes();
};

void StudioService::Impl::routes() {
    auto wrap = [](auto fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const HttpError& e) {
                res.status = e.status;
                res.set_content(json{{"error", e.message}}.dump(), "application/json");
            } catch (const json::exception& e) {
                res.status = 400;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const GeometryError& e) {
                res.status = 422;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const StateError& e) {
                res.status = 409;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            }
        };
    };

    server.Get("/render", wrap([this](const httplib::Request& req, httplib::Response& res) {
                   std::shared_lock lock(mu);
                   const Scene& s = require_scene();
                   if (!req.has_param("cam") || !req.has_param("w") || !req.has_param("h")) {
                       fail(400, "render needs cam, w and h");
                   }
                   const OrbitParams p = parse_cam(req.get_param_value("cam"));
                   const int w = parse_dim(req.get_param_value("w"), "w", options.max_dimension);
                   const int h = parse_dim(req.get_param_value("h"), "h", options.max_dimension);
                   double exposure = options.exposure;
                   if (req.has_param("exposure")) {
                       try {
                           exposure = std::stod(req.get_param_value("exposure"));
                       } catch (const std::logic_error&) {
                           fail(400, "bad exposure");
                       }
                       if (!(exposure > 0) || !std::isfinite(exposure)) {
                           fail(400, "exposure must be positive");
                       }
                   }
                   if (!s.texture && s.mesh.has_uv_area()) {
                       fail(409, "scene has no baked texture");
                   }
                   const RgbImage img = render(s, make_camera(p, w, h), AlbedoSource::Texture);
                   res.set_content(encode_png(to_srgb8(img, exposure)), "image/png");
               }));

    server.Post("/pick", wrap([this](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    std::unique_lock lock(mu);
                    const Scene& s = require_scene();
                    if (!body.contains("pixel") || !body["pixel"].is_array() || body["pixel"].size() != 2 ||
                        !body.contains("cam") || !body["cam"].is_string()) {
                        fail(400, "pick needs pixel [col,row] and cam");
                    }
                    const int w = body.value("w", 0);
                    const int h = body.value("h", 0);
                    if (w <= 0 || h <= 0 || w > options.max_dimension || h > options.max_dimension) {
                        fail(400, "pick needs positive w and h");
                    }
                    const int col = body["pixel"][0].get<int>();
                    const int row = body["pixel"][1].get<int>();
                    if (col < 0 || row < 0 || col >= w || row >= h) {
                        fail(400, "pixel outside the image");
                    }
                    const Camera cam = make_camera(parse_cam(body["cam"].get<std::string>()), w, h);
                    const auto frag = rasterize_pixel(s.mesh, cam, row, col);
                    json out;
                    if (!frag) {
                        out = {{"hit", false}, {"miss", true}, {"anchors", anchors.size()}};
                    } else {
                        const Face& f = s.mesh.face(frag->face);
                        const Vec2 uv = interpolate(*frag, s.chart.vertex_uv[f[0]], s.chart.vertex_uv[f[1]],
                                                    s.chart.vertex_uv[f[2]]);
                        const bool in_area = s.mesh.in_uv_area(frag->face);
                        bool appended = false;
                        if (in_area && anchors.size() < 4) {
                            anchors.push_back(uv);
                            appended = true;
                        }
                        out = {{"hit", true},         {"uv", {uv.x(), uv.y()}}, {"in_uv_area", in_area},
                               {"appended", appended}, {"face", frag->face},     {"anchors", anchors.size()}};
                    }
                    res.set_content(out.dump(), "application/json");
                }));

    server.Post("/anchors/clear", wrap([this](const httplib::Request&, httplib::Response& res) {
                    std::unique_lock lock(mu);
                    require_scene();
                    anchors.clear();
                    res.set_content(json{{"anchors", 0}}.dump(), "application/json");
                }));

    server.Post("/decal", wrap([this](const httplib::Request& req, httplib::Response& res) {
                    std::unique_lock lock(mu);
                    require_scene();
                    if (anchors.size() != 4) {
                        fail(409, fmt::format("decal needs 4 anchors, have {}", anchors.size()));
                    }
                    if (!req.has_file("image")) {
                        fail(400, "multipart field 'image' missing");
                    }
                    DecalSpec spec;
                    try {
                        spec.image = decode_png(req.get_file_value("image").content);
                    } catch (const std::exception& e) {
                        fail(400, fmt::format("image is not a valid PNG: {}", e.what()));
                    }
                    if (req.has_file("roughness")) {
                        try {
                            spec.roughness_override = std::stod(req.get_file_value("roughness").content);
                        } catch (const std::logic_error&) {
                            fail(400, "bad roughness");
                        }
                        if (!(*spec.roughness_override >= 0.0 && *spec.roughness_override <= 1.0)) {
                            fail(422, "roughness must be in [0, 1]");
                        }
                    }
                    std::copy(anchors.begin(), anchors.end(), spec.anchors.begin());
                    const EditReceipt r = apply_decal(*scene, spec);
                    last_quad = spec.anchors;
                    anchors.clear();
                    res.set_content(receipt_json("decal", r).dump(), "application/json");
                }));

    server.Post("/revert", wrap([this](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    std::unique_lock lock(mu);
                    require_scene();
                    if (!body.contains("id") || !body["id"].is_number_integer()) {
                        fail(400, "revert needs an integer id");
                    }
                    EditReceipt r;
                    try {
                        r = revert_edit(*scene, body["id"].get<int>());
                    } catch (const GeometryError&) {
                        throw;
                    } catch (const StateError&) {
                        throw;
                    } catch (const Error& e) {
                        fail(404, e.what());
                    }
                    res.set_content(receipt_json("revert", r).dump(), "application/json");
                }));

    server.Post("/roughness", wrap([this](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    std::unique_lock lock(mu);
                    require_scene();
                    if (!body.contains("value") || !body["value"].is_number()) {
                        fail(400, "roughness needs a numeric value");
                    }
                    const double value = body["value"].get<double>();
                    if (!(value >= 0.0 && value <= 1.0)) {
                        fail(422, "value must be in [0, 1]");
                    }
                    Quad q;
                    if (body.contains("anchors")) {
                        q = parse_quad(body["anchors"]);
                    } else if (last_quad) {
                        q = *last_quad;
                    } else {
                        fail(409, "no anchors given and no previous decal quad");
                    }
                    const EditReceipt r = set_region_roughness(*scene, q, value);
                    res.set_content(receipt_json("roughness", r).dump(), "application/json");
                }));

    server.Get("/scene", wrap([this](const httplib::Request&, httplib::Response& res) {
                   std::shared_lock lock(mu);
                   json out;
                   out["loaded"] = scene.has_value();
                   if (scene) {
                       const Scene& s = *scene;
                       int uv_faces = 0;
                       for (int f = 0; f < s.mesh.num_faces(); ++f) {
                           uv_faces += s.mesh.in_uv_area(f) ? 1 : 0;
                       }
                       json edits = json::array();
                       for (const auto& e : s.edits) {
                           static const char* kinds[] = {"decal", "roughness", "revert"};
                           edits.push_back({{"id", e.id}, {"kind", kinds[static_cast<int>(e.kind)]}});
                       }
                       json pending = json::array();
                       for (const auto& a : anchors) {
                           pending.push_back({a.x(), a.y()});
                       }
                       out["vertices"] = s.mesh.num_vertices();
                       out["faces"] = s.mesh.num_faces();
                       out["uv_faces"] = uv_faces;
                       out["texture_resolution"] = s.texture ? s.texture->width : 0;
                       out["env"] = {s.env.width(), s.env.height(), s.env.levels()};
                       out["target"] = {target.x(), target.y(), target.z()};
                       out["exposure"] = options.exposure;
                       out["anchors"] = pending;
                       out["edits"] = edits;
                   }
                   res.set_content(out.dump(), "application/json");
               }));

    server.Post("/checkpoint/save", wrap([this](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    std::shared_lock lock(mu);
                    const Scene& s = require_scene();
                    if (!body.contains("path") || !body["path"].is_string()) {
                        fail(400, "checkpoint save needs a path");
                    }
                    try {
                        save_checkpoint(s, body["path"].get<std::string>());
                    } catch (const IoError& e) {
                        fail(400, e.what());
                    } catch (const std::filesystem::filesystem_error& e) {
                        fail(400, e.what());
                    }
                    res.set_content(json{{"saved", body["path"]}}.dump(), "application/json");
                }));

    server.Post("/checkpoint/load", wrap([this](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    if (!body.contains("path") || !body["path"].is_string()) {
                        fail(400, "checkpoint load needs a path");
                    }
                    Scene s;
                    try {
                        s = load_checkpoint(body["path"].get<std::string>());
                    } catch (const IoError& e) {
                        fail(400, e.what());
                    } catch (const ParseError& e) {
                        fail(422, e.what());
                    }
                    std::unique_lock lock(mu);
                    reset(std::move(s));
                    res.set_content(json{{"loaded", body["path"]}}.dump(), "application/json");
                }));
}

StudioService::StudioService(StudioOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    // SO_REUSEADDR only: a second service on a busy port must fail to bind.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    impl_->routes();
}

StudioService::~StudioService() { stop(); }

void StudioService::set_scene(Scene scene) {
    std::unique_lock lock(impl_->mu);
    impl_->reset(std::move(scene));
}

bool StudioService::has_scene() const {
    std::shared_lock lock(impl_->mu);
    return impl_->scene.has_value();
}

Scene StudioService::scene() const {
    std::shared_lock lock(impl_->mu);
    if (!impl_->scene) {
        throw StateError("no scene loaded");
    }
    return *impl_->scene;
}

int StudioService::start() {
    auto& im = *impl_;
    if (im.options.port == 0) {
        im.bound_port = im.server.bind_to_any_port(im.options.host);
    } else {
        im.bound_port = im.server.bind_to_port(im.options.host, im.options.port) ? im.options.port : -1;
    }
    if (im.bound_port <= 0) {
        throw IoError(fmt::format("cannot bind {}:{}", im.options.host, im.options.port));
    }
    im.thread = std::thread([&im] { im.server.listen_after_bind(); });
    im.server.wait_until_ready();
    return im.bound_port;
}

void StudioService::run() {
    auto& im = *impl_;
    if (!im.server.listen(im.options.host, im.options.port)) {
        throw IoError(fmt::format("cannot listen on {}:{}", im.options.host, im.options.port));
    }
}

void StudioService::stop() {
    if (!impl_) {
        return;
    }
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

int StudioService::port() const { return impl_->bound_port; }

} // namespace decalforge
