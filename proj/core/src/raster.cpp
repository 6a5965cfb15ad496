// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/raster.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <thread>

#include <fmt/format.h>

namespace decalforge {

namespace {

struct ClipVertex {
    Vec3 cam;  // camera-space position
    Vec3 bary; // barycentrics in the original face
};

struct ScreenTri {
    int face;
    Vec2 p[3];
    double inv_depth[3];
    Vec3 bary[3];
    double area2;
    int row_lo, row_hi, col_lo, col_hi; // inclusive pixel bounds
};

double edge_raw(const Vec2& a, const Vec2& b, const Vec2& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

/// Evaluated from a canonical endpoint order so edge(a, b, p) == -edge(b, a, p)
/// exactly and shared edges never leave gaps.
double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
    const bool swap = b.x() < a.x() || (b.x() == a.x() && b.y() < a.y());
    return swap ? -edge_raw(b, a, p) : edge_raw(a, b, p);
}

/// Edges with a pixel center exactly on them belong to the triangle only on
/// its top or left side. With area2 > 0 in y-down screen space, top edges run
/// in +x and left edges run in -y.
bool top_left(const Vec2& a, const Vec2& b) {
    const double dx = b.x() - a.x();
    const double dy = b.y() - a.y();
    return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

std::vector<ClipVertex> clip_near(const std::array<ClipVertex, 3>& tri, double near) {
    std::vector<ClipVertex> out;
    for (int i = 0; i < 3; ++i) {
        const ClipVertex& a = tri[i];
        const ClipVertex& b = tri[(i + 1) % 3];
        const double da = -a.cam.z() - near;
        const double db = -b.cam.z() - near;
        if (da >= 0) {
            out.push_back(a);
        }
        if ((da >= 0) != (db >= 0)) {
            const double t = da / (da - db);
            out.push_back({a.cam + t * (b.cam - a.cam), a.bary + t * (b.bary - a.bary)});
        }
    }
    return out;
}

void setup_face(const TriMesh& mesh, const Camera& cam, int f, const PixelRect& rect, double near,
                std::vector<ScreenTri>& out) {
    const Face& face = mesh.face(f);
    std::array<ClipVertex, 3> tri;
    for (int k = 0; k < 3; ++k) {
        tri[k].cam = cam.to_camera(mesh.vertex(face[k]));
        tri[k].bary = Vec3::Unit(k);
    }
    if (tri[0].cam.z() > -near && tri[1].cam.z() > -near && tri[2].cam.z() > -near) {
        return;
    }
    const auto poly = clip_near(tri, near);
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        const ClipVertex* v[3] = {&poly[0], &poly[i], &poly[i + 1]};
        ScreenTri s;
        s.face = f;
        for (int k = 0; k < 3; ++k) {
            const double depth = -v[k]->cam.z();
            s.p[k] = Vec2(cam.cx + cam.focal * v[k]->cam.x() / depth, cam.cy - cam.focal * v[k]->cam.y() / depth);
            s.inv_depth[k] = 1.0 / depth;
            s.bary[k] = v[k]->bary;
        }
        s.area2 = edge(s.p[0], s.p[1], s.p[2]);
        if (s.area2 == 0.0 || !std::isfinite(s.area2)) {
            continue;
        }
        if (s.area2 < 0) {
            std::swap(s.p[1], s.p[2]);
            std::swap(s.inv_depth[1], s.inv_depth[2]);
            std::swap(s.bary[1], s.bary[2]);
            s.area2 = -s.area2;
        }
        const double xmin = std::min({s.p[0].x(), s.p[1].x(), s.p[2].x()});
        const double xmax = std::max({s.p[0].x(), s.p[1].x(), s.p[2].x()});
        const double ymin = std::min({s.p[0].y(), s.p[1].y(), s.p[2].y()});
        const double ymax = std::max({s.p[0].y(), s.p[1].y(), s.p[2].y()});
        // Pixel centers at (c + 0.5, r + 0.5).
        s.col_lo = std::max(rect.col0, static_cast<int>(std::ceil(xmin - 0.5)));
        s.col_hi = std::min(rect.col1 - 1, static_cast<int>(std::floor(xmax - 0.5)));
        s.row_lo = std::max(rect.row0, static_cast<int>(std::ceil(ymin - 0.5)));
        s.row_hi = std::min(rect.row1 - 1, static_cast<int>(std::floor(ymax - 0.5)));
        if (s.col_lo > s.col_hi || s.row_lo > s.row_hi) {
            continue;
        }
        out.push_back(s);
    }
}

void fill_band(const TriMesh& mesh, const Camera& cam, const std::vector<ScreenTri>& tris, int row_begin,
               int row_end, FragmentBuffer& buffer) {
    for (const ScreenTri& s : tris) {
        const int r0 = std::max(s.row_lo, row_begin);
        const int r1 = std::min(s.row_hi, row_end - 1);
        const bool tl[3] = {top_left(s.p[1], s.p[2]), top_left(s.p[2], s.p[0]), top_left(s.p[0], s.p[1])};
        for (int r = r0; r <= r1; ++r) {
            for (int c = s.col_lo; c <= s.col_hi; ++c) {
                const Vec2 p(c + 0.5, r + 0.5);
                const double e[3] = {edge(s.p[1], s.p[2], p), edge(s.p[2], s.p[0], p), edge(s.p[0], s.p[1], p)};
                bool inside = true;
                for (int k = 0; k < 3; ++k) {
                    if (e[k] < 0 || (e[k] == 0 && !tl[k])) {
                        inside = false;
                        break;
                    }
                }
                if (!inside) {
                    continue;
                }
                double w[3];
                double sum = 0;
                for (int k = 0; k < 3; ++k) {
                    w[k] = e[k] / s.area2 * s.inv_depth[k];
                    sum += w[k];
                }
                const double depth = 1.0 / sum;
                auto& slot = buffer.at(r, c);
                if (slot && !(depth < slot->depth)) {
                    continue;
                }
                Vec3 bary = (w[0] * s.bary[0] + w[1] * s.bary[1] + w[2] * s.bary[2]) / sum;
                bary = bary.cwiseMax(0.0);
                bary /= bary.sum();
                const Face& face = mesh.face(s.face);
                Fragment frag;
                frag.row = r;
                frag.col = c;
                frag.face = s.face;
                frag.bary = bary;
                frag.depth = depth;
                frag.position = bary[0] * mesh.vertex(face[0]) + bary[1] * mesh.vertex(face[1]) +
                                bary[2] * mesh.vertex(face[2]);
                frag.view_dir = (frag.position - cam.position).normalized();
                slot = frag;
            }
        }
    }
}

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw IoError("truncated fragment file");
    }
    return v;
}

constexpr char kFragMagic[8] = {'D', 'F', 'F', 'R', 'A', 'G', '0', '1'};

} // namespace

int FragmentBuffer::covered() const {
    return static_cast<int>(std::count_if(pixels_.begin(), pixels_.end(), [](const auto& p) { return p.has_value(); }));
}

std::vector<Fragment> FragmentBuffer::fragments() const {
    std::vector<Fragment> out;
    for (const auto& p : pixels_) {
        if (p) {
            out.push_back(*p);
        }
    }
    return out;
}

bool FragmentBuffer::operator==(const FragmentBuffer& other) const {
    if (width_ != other.width_ || height_ != other.height_) {
        return false;
    }
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
        const auto& a = pixels_[i];
        const auto& b = other.pixels_[i];
        if (a.has_value() != b.has_value()) {
            return false;
        }
        if (a && (a->face != b->face || a->bary != b->bary || a->depth != b->depth ||
                  a->position != b->position || a->view_dir != b->view_dir)) {
            return false;
        }
    }
    return true;
}

FragmentBuffer rasterize(const TriMesh& mesh, const Camera& cam, const RasterOptions& options) {
    cam.validate();
    FragmentBuffer buffer(cam.width, cam.height);
    PixelRect rect{0, 0, cam.height, cam.width};
    if (options.scissor) {
        rect.row0 = std::max(0, options.scissor->row0);
        rect.col0 = std::max(0, options.scissor->col0);
        rect.row1 = std::min(cam.height, options.scissor->row1);
        rect.col1 = std::min(cam.width, options.scissor->col1);
        if (rect.row0 >= rect.row1 || rect.col0 >= rect.col1) {
            return buffer;
        }
    }
    std::vector<ScreenTri> tris;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        setup_face(mesh, cam, f, rect, options.near, tris);
    }

    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, std::max(1, rect.row1 - rect.row0));
    if (threads == 1) {
        fill_band(mesh, cam, tris, rect.row0, rect.row1, buffer);
        return buffer;
    }
    std::vector<std::thread> pool;
    const int rows = rect.row1 - rect.row0;
    for (int t = 0; t < threads; ++t) {
        const int b = rect.row0 + rows * t / threads;
        const int e = rect.row0 + rows * (t + 1) / threads;
        pool.emplace_back([&, b, e] { fill_band(mesh, cam, tris, b, e, buffer); });
    }
    for (auto& th : pool) {
        th.join();
    }
    return buffer;
}

std::optional<Fragment> rasterize_pixel(const TriMesh& mesh, const Camera& cam, int row, int col) {
    if (row < 0 || col < 0 || row >= cam.height || col >= cam.width) {
        throw Error(fmt::format("pixel ({}, {}) outside the {}x{} image", row, col, cam.width, cam.height));
    }
    RasterOptions opts;
    opts.scissor = PixelRect{row, col, row + 1, col + 1};
    opts.threads = 1;
    return rasterize(mesh, cam, opts).at(row, col);
}

Vec3 interpolate_normal(const TriMesh& mesh, const Fragment& frag) {
    const Face& f = mesh.face(frag.face);
    const auto& n = mesh.vertex_normals();
    const Vec3 v = interpolate(frag, n[f[0]], n[f[1]], n[f[2]]);
    const double len = v.norm();
    return len > 1e-12 ? Vec3(v / len) : mesh.face_normal(frag.face);
}

std::uint64_t fragment_cache_key(const TriMesh& mesh, const Camera& cam) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    mix(mesh.vertices().data(), mesh.vertices().size() * sizeof(Vec3));
    mix(mesh.faces().data(), mesh.faces().size() * sizeof(Face));
    mix(cam.rotation.data(), 9 * sizeof(double));
    mix(cam.position.data(), 3 * sizeof(double));
    const double intr[3] = {cam.focal, cam.cx, cam.cy};
    mix(intr, sizeof(intr));
    const int size[2] = {cam.width, cam.height};
    mix(size, sizeof(size));
    return h;
}

void save_fragments(const FragmentBuffer& buffer, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
    os.write(kFragMagic, sizeof(kFragMagic));
    put<std::int32_t>(os, buffer.width());
    put<std::int32_t>(os, buffer.height());
    put<std::int32_t>(os, buffer.covered());
    for (const auto& p : buffer.pixels()) {
        if (!p) {
            continue;
        }
        put<std::int32_t>(os, p->row);
        put<std::int32_t>(os, p->col);
        put<std::int32_t>(os, p->face);
        for (int k = 0; k < 3; ++k) {
            put(os, p->bary[k]);
        }
        put(os, p->depth);
        for (int k = 0; k < 3; ++k) {
            put(os, p->position[k]);
        }
        for (int k = 0; k < 3; ++k) {
            put(os, p->view_dir[k]);
        }
    }
    if (!os) {
        throw IoError(fmt::format("failed writing {}", path.string()));
    }
}

FragmentBuffer load_fragments(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(fmt::format("cannot read {}", path.string()));
    }
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kFragMagic, sizeof(magic)) != 0) {
        throw IoError(fmt::format("{} is not a fragment file", path.string()));
    }
    const int w = get<std::int32_t>(is);
    const int h = get<std::int32_t>(is);
    const int n = get<std::int32_t>(is);
    if (w <= 0 || h <= 0 || n < 0 || n > w * h) {
        throw IoError(fmt::format("{} has an invalid header", path.string()));
    }
    FragmentBuffer buffer(w, h);
    for (int i = 0; i < n; ++i) {
        Fragment f;
        f.row = get<std::int32_t>(is);
        f.col = get<std::int32_t>(is);
        f.face = get<std::int32_t>(is);
        for (int k = 0; k < 3; ++k) {
            f.bary[k] = get<double>(is);
        }
        f.depth = get<double>(is);
        for (int k = 0; k < 3; ++k) {
            f.position[k] = get<double>(is);
        }
        for (int k = 0; k < 3; ++k) {
            f.view_dir[k] = get<double>(is);
        }
        if (f.row < 0 || f.row >= h || f.col < 0 || f.col >= w) {
            throw IoError(fmt::format("{} has a fragment outside the image", path.string()));
        }
        buffer.at(f.row, f.col) = f;
    }
    return buffer;
}

FragmentBuffer rasterize_cached(const TriMesh& mesh, const Camera& cam, const std::filesystem::path& dir) {
    const auto path = dir / fmt::format("{:016x}.frag", fragment_cache_key(mesh, cam));
    if (std::filesystem::exists(path)) {
        return load_fragments(path);
    }
    auto buffer = rasterize(mesh, cam);
    std::filesystem::create_directories(dir);
    const auto tmp = path.string() + ".tmp";
    save_fragments(buffer, tmp);
    std::filesystem::rename(tmp, path);
    return buffer;
}

} // namespace decalforge
