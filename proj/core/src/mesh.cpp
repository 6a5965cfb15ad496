// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include <Eigen/Geometry>
#include <fmt/format.h>

namespace decalforge {

namespace {

std::uint64_t edge_key(int a, int b) {
    if (a > b) {
        std::swap(a, b);
    }
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

} // namespace

TriMesh TriMesh::from_arrays(std::vector<Vec3> vertices, std::vector<Face> faces,
                             std::vector<Vec3> normals) {
    TriMesh mesh;
    const int n_in = static_cast<int>(vertices.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (int v : faces[f]) {
            if (v < 0 || v >= n_in) {
                throw ParseError(fmt::format("face {} references vertex {} but the mesh has {} vertices",
                                             f, v, n_in));
            }
        }
    }
    if (!normals.empty() && normals.size() != vertices.size()) {
        throw ParseError("normal count does not match vertex count");
    }

    Eigen::AlignedBox3d box;
    for (const auto& p : vertices) {
        box.extend(p);
    }
    const double diag = vertices.empty() ? 1.0 : box.diagonal().norm();
    const double min_area = 1e-14 * diag * diag;

    std::vector<Face> kept;
    kept.reserve(faces.size());
    int dropped = 0;
    for (const auto& f : faces) {
        const double area =
            0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || !(area > min_area)) {
            ++dropped;
            continue;
        }
        kept.push_back(f);
    }
    if (dropped > 0) {
        mesh.warnings_.push_back(fmt::format("dropped {} degenerate triangle(s)", dropped));
    }

    // Prune unreferenced vertices, keeping the original relative order.
    std::vector<int> remap(n_in, -1);
    for (const auto& f : kept) {
        for (int v : f) {
            remap[v] = 0;
        }
    }
    int next = 0;
    for (int v = 0; v < n_in; ++v) {
        if (remap[v] == 0) {
            remap[v] = next++;
        }
    }
    if (next < n_in) {
        mesh.warnings_.push_back(fmt::format("pruned {} unreferenced vertex(es)", n_in - next));
    }
    mesh.vertices_.resize(next);
    if (!normals.empty()) {
        mesh.normals_.resize(next);
    }
    for (int v = 0; v < n_in; ++v) {
        if (remap[v] >= 0) {
            mesh.vertices_[remap[v]] = vertices[v];
            if (!normals.empty()) {
                mesh.normals_[remap[v]] = normals[v];
            }
        }
    }
    for (auto& f : kept) {
        for (int& v : f) {
            v = remap[v];
        }
    }
    mesh.faces_ = std::move(kept);

    std::map<std::uint64_t, int> edge_use;
    for (const auto& f : mesh.faces_) {
        for (int k = 0; k < 3; ++k) {
            ++edge_use[edge_key(f[k], f[(k + 1) % 3])];
        }
    }
    const auto non_manifold =
        std::count_if(edge_use.begin(), edge_use.end(), [](const auto& e) { return e.second > 2; });
    if (non_manifold > 0) {
        mesh.warnings_.push_back(fmt::format("{} non-manifold edge(s)", non_manifold));
    }

    bool need_normals = mesh.normals_.empty();
    for (auto& n : mesh.normals_) {
        const double len = n.norm();
        if (!(len > 1e-12) || !std::isfinite(len)) {
            need_normals = true;
            break;
        }
        n /= len;
    }
    if (need_normals) {
        mesh.normals_.assign(next, Vec3::Zero());
        for (const auto& f : mesh.faces_) {
            // Cross product length is twice the area, so this is area weighted.
            const Vec3 n = (mesh.vertices_[f[1]] - mesh.vertices_[f[0]])
                               .cross(mesh.vertices_[f[2]] - mesh.vertices_[f[0]]);
            for (int v : f) {
                mesh.normals_[v] += n;
            }
        }
        for (auto& n : mesh.normals_) {
            const double len = n.norm();
            n = len > 0 ? Vec3(n / len) : Vec3::UnitZ();
        }
    }

    mesh.in_uv_area_.assign(mesh.faces_.size(), 0);
    mesh.vertex_in_area_.assign(next, 0);
    return mesh;
}

bool TriMesh::has_uv_area() const {
    return std::any_of(in_uv_area_.begin(), in_uv_area_.end(), [](std::uint8_t b) { return b != 0; });
}

bool TriMesh::vertex_in_uv_area(int v) const { return vertex_in_area_[v] != 0; }

Vec3 TriMesh::face_normal(int f) const {
    const auto& t = faces_[f];
    return (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).normalized();
}

double TriMesh::face_area(int f) const {
    const auto& t = faces_[f];
    return 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
}

TriMesh TriMesh::with_uv_area(std::vector<std::uint8_t> flags) const {
    if (flags.size() != faces_.size()) {
        throw Error("UV-area flag count does not match face count");
    }
    TriMesh out = *this;
    out.in_uv_area_ = std::move(flags);
    out.vertex_in_area_.assign(vertices_.size(), 0);
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        if (out.in_uv_area_[f]) {
            out.in_uv_area_[f] = 1;
            for (int v : faces_[f]) {
                out.vertex_in_area_[v] = 1;
            }
        }
    }
    return out;
}

TriMesh TriMesh::scaled(double factor) const {
    TriMesh out = *this;
    for (auto& p : out.vertices_) {
        p *= factor;
    }
    return out;
}

std::vector<std::vector<int>> face_edge_neighbors(const TriMesh& mesh) {
    std::map<std::uint64_t, std::vector<int>> edge_faces;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto& t = mesh.face(f);
        for (int k = 0; k < 3; ++k) {
            edge_faces[edge_key(t[k], t[(k + 1) % 3])].push_back(f);
        }
    }
    std::vector<std::vector<int>> nbrs(mesh.num_faces());
    for (const auto& [key, fs] : edge_faces) {
        for (int a : fs) {
            for (int b : fs) {
                if (a != b) {
                    nbrs[a].push_back(b);
                }
            }
        }
    }
    for (auto& n : nbrs) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    return nbrs;
}

namespace {

bool parse_double(std::string_view tok, double& out) {
    // std::from_chars for double is available in libstdc++ 11.
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

bool parse_int(std::string_view tok, long& out) {
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

} // namespace

TriMesh parse_obj(const std::string& text) {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<Face> faces;
    std::vector<std::array<long, 3>> face_normal_idx;
    bool all_corners_have_normals = true;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    // Face indices are resolved after the whole file is read so that a face
    // may reference vertices declared later; remember where each face was.
    std::vector<int> face_line;
    std::vector<std::array<long, 3>> raw_faces;

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        std::string_view view(line);
        if (hash != std::string::npos) {
            view = view.substr(0, hash);
        }
        const auto tok = split_ws(view);
        if (tok.empty()) {
            continue;
        }
        if (tok[0] == "v" || tok[0] == "vn") {
            if (tok.size() < 4) {
                throw ParseError(fmt::format("'{}' needs three coordinates", tok[0]), line_no);
            }
            Vec3 p;
            for (int k = 0; k < 3; ++k) {
                if (!parse_double(tok[k + 1], p[k]) || !std::isfinite(p[k])) {
                    throw ParseError(fmt::format("invalid number '{}'", tok[k + 1]), line_no);
                }
            }
            (tok[0] == "v" ? positions : normals).push_back(p);
        } else if (tok[0] == "f") {
            if (tok.size() < 4) {
                throw ParseError("face needs at least three corners", line_no);
            }
            std::vector<long> vidx;
            std::vector<long> nidx;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const auto corner = tok[k];
                const auto s1 = corner.find('/');
                long v = 0;
                if (!parse_int(corner.substr(0, s1), v) || v == 0) {
                    throw ParseError(fmt::format("invalid face corner '{}'", corner), line_no);
                }
                long n = 0;
                if (s1 != std::string_view::npos) {
                    const auto s2 = corner.find('/', s1 + 1);
                    if (s2 != std::string_view::npos && s2 + 1 < corner.size()) {
                        if (!parse_int(corner.substr(s2 + 1), n)) {
                            throw ParseError(fmt::format("invalid normal index in '{}'", corner), line_no);
                        }
                    }
                }
                // Negative indices are relative to the current end of the list.
                if (v < 0) {
                    v = static_cast<long>(positions.size()) + v + 1;
                }
                if (n < 0) {
                    n = static_cast<long>(normals.size()) + n + 1;
                }
                vidx.push_back(v - 1);
                nidx.push_back(n - 1);
            }
            for (std::size_t k = 1; k + 1 < vidx.size(); ++k) {
                raw_faces.push_back({vidx[0], vidx[k], vidx[k + 1]});
                face_normal_idx.push_back({nidx[0], nidx[k], nidx[k + 1]});
                face_line.push_back(line_no);
            }
        }
        // vt, o, g, s, usemtl, mtllib and friends carry nothing we need.
    }

    const long nv = static_cast<long>(positions.size());
    faces.reserve(raw_faces.size());
    for (std::size_t f = 0; f < raw_faces.size(); ++f) {
        Face face{};
        for (int k = 0; k < 3; ++k) {
            const long v = raw_faces[f][k];
            if (v < 0 || v >= nv) {
                throw ParseError(fmt::format("face index {} out of range for {} vertices", v + 1, nv),
                                 face_line[f]);
            }
            face[k] = static_cast<int>(v);
            const long n = face_normal_idx[f][k];
            if (n < 0 || n >= static_cast<long>(normals.size())) {
                all_corners_have_normals = false;
            }
        }
        faces.push_back(face);
    }

    std::vector<Vec3> vertex_normals;
    if (!normals.empty() && all_corners_have_normals && !faces.empty()) {
        vertex_normals.assign(positions.size(), Vec3::Zero());
        for (std::size_t f = 0; f < faces.size(); ++f) {
            for (int k = 0; k < 3; ++k) {
                vertex_normals[faces[f][k]] += normals[face_normal_idx[f][k]];
            }
        }
    }
    return TriMesh::from_arrays(std::move(positions), std::move(faces), std::move(vertex_normals));
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open mesh '{}'", path.string()));
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_obj(buf.str());
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError(fmt::format("cannot write mesh '{}'", path.string()));
    }
    for (const auto& p : mesh.vertices()) {
        out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());
    }
    for (const auto& n : mesh.vertex_normals()) {
        out << fmt::format("vn {:.17g} {:.17g} {:.17g}\n", n.x(), n.y(), n.z());
    }
    for (const auto& f : mesh.faces()) {
        out << fmt::format("f {0}//{0} {1}//{1} {2}//{2}\n", f[0] + 1, f[1] + 1, f[2] + 1);
    }
}

TriMesh select_region(const TriMesh& mesh, int seed_face, int max_faces) {
    if (seed_face < 0 || seed_face >= mesh.num_faces()) {
        throw Error(fmt::format("seed face {} is not a face of a {}-face mesh", seed_face, mesh.num_faces()));
    }
    const auto nbrs = face_edge_neighbors(mesh);
    std::vector<std::uint8_t> flags(mesh.num_faces(), 0);
    std::queue<int> queue;
    queue.push(seed_face);
    flags[seed_face] = 1;
    int collected = 1;
    while (!queue.empty() && collected < max_faces) {
        const int f = queue.front();
        queue.pop();
        for (int g : nbrs[f]) {
            if (collected >= max_faces) {
                break;
            }
            if (!flags[g]) {
                flags[g] = 1;
                ++collected;
                queue.push(g);
            }
        }
    }
    return mesh.with_uv_area(std::move(flags));
}

std::vector<double> geodesic_distances_from(const TriMesh& mesh, int source) {
    const int n = mesh.num_vertices();
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    {
        std::vector<std::uint64_t> seen;
        seen.reserve(mesh.num_faces() * 3);
        for (const auto& f : mesh.faces()) {
            for (int k = 0; k < 3; ++k) {
                seen.push_back(edge_key(f[k], f[(k + 1) % 3]));
            }
        }
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto key : seen) {
            const int a = static_cast<int>(key >> 32);
            const int b = static_cast<int>(key & 0xffffffffu);
            const double w = (mesh.vertex(a) - mesh.vertex(b)).norm();
            adj[a].emplace_back(b, w);
            adj[b].emplace_back(a, w);
        }
    }
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v]) {
            continue;
        }
        for (const auto& [w, len] : adj[v]) {
            const double nd = d + len;
            if (nd < dist[w]) {
                dist[w] = nd;
                heap.emplace(nd, w);
            }
        }
    }
    return dist;
}

double geodesic_distance(const TriMesh& mesh, int v_a, int v_b) {
    for (int v : {v_a, v_b}) {
        if (v < 0 || v >= mesh.num_vertices()) {
            throw Error(fmt::format("vertex {} out of range", v));
        }
        if (!mesh.vertex_in_uv_area(v)) {
            throw StateError(fmt::format("vertex {} does not touch the UV area", v));
        }
    }
    if (v_a == v_b) {
        return 0.0;
    }
    const double d = geodesic_distances_from(mesh, v_a)[v_b];
    if (!std::isfinite(d)) {
        throw TopologyError(fmt::format("vertices {} and {} are not connected", v_a, v_b));
    }
    return d;
}

void save_region(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError(fmt::format("cannot write region file '{}'", path.string()));
    }
    for (int f = 0; f < mesh.num_faces(); ++f) {
        if (mesh.in_uv_area(f)) {
            out << f << '\n';
        }
    }
}

TriMesh load_region(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open region file '{}'", path.string()));
    }
    std::vector<std::uint8_t> flags(mesh.num_faces(), 0);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tok = split_ws(line);
        if (tok.empty()) {
            continue;
        }
        long f = 0;
        if (tok.size() != 1 || !parse_int(tok[0], f)) {
            throw ParseError("expected one face index per line", line_no);
        }
        if (f < 0 || f >= mesh.num_faces()) {
            throw ParseError(fmt::format("face index {} out of range", f), line_no);
        }
        flags[f] = 1;
    }
    TriMesh out = mesh.with_uv_area(std::move(flags));
    if (!uv_area_connected(out)) {
        throw TopologyError(fmt::format("region in '{}' is not edge-connected", path.string()));
    }
    return out;
}

bool uv_area_connected(const TriMesh& mesh) {
    int first = -1;
    int total = 0;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        if (mesh.in_uv_area(f)) {
            if (first < 0) {
                first = f;
            }
            ++total;
        }
    }
    if (total == 0) {
        return true;
    }
    const auto nbrs = face_edge_neighbors(mesh);
    std::vector<std::uint8_t> seen(mesh.num_faces(), 0);
    std::vector<int> stack{first};
    seen[first] = 1;
    int reached = 0;
    while (!stack.empty()) {
        const int f = stack.back();
        stack.pop_back();
        ++reached;
        for (int g : nbrs[f]) {
            if (mesh.in_uv_area(g) && !seen[g]) {
                seen[g] = 1;
                stack.push_back(g);
            }
        }
    }
    return reached == total;
}

} // namespace decalforge
