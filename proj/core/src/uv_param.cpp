// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/uv_param.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace decalforge {

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};

/// UV-area faces re-indexed over the vertices they touch.
struct Patch {
    std::vector<int> to_mesh;   // local vertex -> mesh vertex
    std::vector<int> to_local;  // mesh vertex -> local vertex or -1
    std::vector<Face> faces;    // local indices
    std::vector<Vec3> positions;
};

Patch extract_patch(const TriMesh& mesh) {
    Patch p;
    p.to_local.assign(mesh.num_vertices(), -1);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        if (!mesh.in_uv_area(f)) {
            continue;
        }
        Face local{};
        for (int k = 0; k < 3; ++k) {
            const int v = mesh.face(f)[k];
            if (p.to_local[v] < 0) {
                p.to_local[v] = static_cast<int>(p.to_mesh.size());
                p.to_mesh.push_back(v);
                p.positions.push_back(mesh.vertex(v));
            }
            local[k] = p.to_local[v];
        }
        p.faces.push_back(local);
    }
    if (p.faces.empty()) {
        throw StateError("mesh has no UV area");
    }
    return p;
}

std::uint64_t ekey(int a, int b) {
    if (a > b) {
        std::swap(a, b);
    }
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

/// Ordered boundary loop of a disk patch, oriented like the faces.
std::vector<int> disk_boundary(const Patch& p) {
    std::map<std::uint64_t, int> use;
    for (const auto& f : p.faces) {
        for (int k = 0; k < 3; ++k) {
            ++use[ekey(f[k], f[(k + 1) % 3])];
        }
    }
    for (const auto& [key, n] : use) {
        if (n > 2) {
            throw TopologyError(fmt::format("UV area is not a disk: edge ({}, {}) is non-manifold",
                                            key >> 32, key & 0xffffffffu));
        }
    }
    const int nv = static_cast<int>(p.positions.size());
    std::vector<std::vector<int>> badj(nv);
    int first_a = -1;
    int first_b = -1;
    int n_boundary_edges = 0;
    for (const auto& f : p.faces) {
        for (int k = 0; k < 3; ++k) {
            const int a = f[k];
            const int b = f[(k + 1) % 3];
            if (use[ekey(a, b)] == 1) {
                badj[a].push_back(b);
                badj[b].push_back(a);
                ++n_boundary_edges;
                if (first_a < 0) {
                    first_a = a;
                    first_b = b;
                }
            }
        }
    }
    if (n_boundary_edges == 0) {
        throw TopologyError("UV area is not a disk: closed surface with no boundary loop");
    }
    for (int v = 0; v < nv; ++v) {
        if (!badj[v].empty() && badj[v].size() != 2) {
            throw TopologyError(
                fmt::format("UV area is not a disk: boundary vertex {} is non-manifold", v));
        }
    }
    std::vector<int> loop{first_a};
    std::vector<std::uint8_t> on_loop(nv, 0);
    on_loop[first_a] = 1;
    int prev = first_a;
    int cur = first_b;
    while (cur != first_a) {
        loop.push_back(cur);
        on_loop[cur] = 1;
        const int next = badj[cur][0] == prev ? badj[cur][1] : badj[cur][0];
        prev = cur;
        cur = next;
    }
    if (static_cast<int>(loop.size()) != n_boundary_edges) {
        int loops = 1;
        std::vector<std::uint8_t> seen = on_loop;
        for (int v = 0; v < nv; ++v) {
            if (!badj[v].empty() && !seen[v]) {
                ++loops;
                int c = v;
                int pr = -1;
                do {
                    seen[c] = 1;
                    const int nx = badj[c][0] == pr ? badj[c][1] : badj[c][0];
                    pr = c;
                    c = nx;
                } while (c != v);
            }
        }
        throw TopologyError(fmt::format("UV area is not a disk: {} boundary loops", loops));
    }
    const int euler = nv - static_cast<int>(use.size()) + static_cast<int>(p.faces.size());
    if (euler != 1) {
        throw TopologyError(
            fmt::format("UV area is not a disk: Euler characteristic {} (nonzero genus)", euler));
    }
    return loop;
}

std::vector<Vec2> to_local(const Patch& p, const std::vector<Vec2>& mesh_uv) {
    std::vector<Vec2> out(p.to_mesh.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = mesh_uv[p.to_mesh[i]];
    }
    return out;
}

UvChart to_chart(const Patch& p, const std::vector<Vec2>& local, int n_mesh_vertices, double margin,
                 double energy) {
    UvChart chart;
    chart.vertex_uv.assign(n_mesh_vertices, Vec2::Zero());
    for (std::size_t i = 0; i < local.size(); ++i) {
        chart.vertex_uv[p.to_mesh[i]] = local[i];
    }
    chart.margin = margin;
    chart.arap_energy = energy;
    return chart;
}

/// Isometric 2D frame of each triangle plus its corner cotangents.
struct TriangleFrame {
    Eigen::Matrix2d edge_inv; // inverse of [x1 - x0, x2 - x0]
    Vec2 x[3];
    double cot[3]; // cot of the angle at corner k (weights the opposite edge)
    double area;
};

std::vector<TriangleFrame> build_frames(const Patch& p) {
    std::vector<TriangleFrame> frames(p.faces.size());
    for (std::size_t t = 0; t < p.faces.size(); ++t) {
        const auto& f = p.faces[t];
        const Vec3 e1 = p.positions[f[1]] - p.positions[f[0]];
        const Vec3 e2 = p.positions[f[2]] - p.positions[f[0]];
        const double l1 = e1.norm();
        const Vec3 ax = e1 / l1;
        const double x2 = e2.dot(ax);
        const double y2 = (e2 - x2 * ax).norm();
        auto& fr = frames[t];
        fr.x[0] = Vec2(0, 0);
        fr.x[1] = Vec2(l1, 0);
        fr.x[2] = Vec2(x2, y2);
        fr.area = 0.5 * l1 * y2;
        Eigen::Matrix2d e;
        e.col(0) = fr.x[1] - fr.x[0];
        e.col(1) = fr.x[2] - fr.x[0];
        fr.edge_inv = e.inverse();
        for (int k = 0; k < 3; ++k) {
            const Vec2 a = fr.x[(k + 1) % 3] - fr.x[k];
            const Vec2 b = fr.x[(k + 2) % 3] - fr.x[k];
            const double cross = a.x() * b.y() - a.y() * b.x();
            fr.cot[k] = a.dot(b) / std::abs(cross);
        }
    }
    return frames;
}

Eigen::Matrix2d closest_rotation(const Eigen::Matrix2d& m) {
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d u = svd.matrixU();
    const Eigen::Matrix2d v = svd.matrixV();
    Eigen::Matrix2d r = u * v.transpose();
    if (r.determinant() < 0) {
        u.col(1) *= -1.0;
        r = u * v.transpose();
    }
    return r;
}

Eigen::Matrix2d jacobian(const TriangleFrame& fr, const Face& f, const std::vector<Vec2>& uv) {
    Eigen::Matrix2d du;
    du.col(0) = uv[f[1]] - uv[f[0]];
    du.col(1) = uv[f[2]] - uv[f[0]];
    return du * fr.edge_inv;
}

double patch_energy(const Patch& p, const std::vector<TriangleFrame>& frames,
                    const std::vector<Vec2>& uv) {
    double e = 0.0;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const Eigen::Matrix2d j = jacobian(frames[t], p.faces[t], uv);
        e += frames[t].area * (j - closest_rotation(j)).squaredNorm();
    }
    return e;
}

double uv_area(const Patch& p, const std::vector<Vec2>& uv) {
    double a = 0.0;
    for (const auto& f : p.faces) {
        const Vec2 e1 = uv[f[1]] - uv[f[0]];
        const Vec2 e2 = uv[f[2]] - uv[f[0]];
        a += 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    }
    return a;
}

/// Centers, aligns to principal axes and fits the UVs into [margin, 1-margin]^2.
void normalize_into_unit_square(std::vector<Vec2>& uv, double margin) {
    Vec2 c = Vec2::Zero();
    for (const auto& q : uv) {
        c += q;
    }
    c /= static_cast<double>(uv.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& q : uv) {
        cov += (q - c) * (q - c).transpose();
    }
    Vec2 axis(1, 0);
    if (uv.size() >= 2 && cov.trace() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
        axis = es.eigenvectors().col(1).normalized();
        // Sign convention tied to the data so that scaled inputs map identically.
        for (const auto& q : uv) {
            const double s = (q - c).dot(axis);
            if (std::abs(s) > 1e-9 * std::sqrt(cov.trace())) {
                if (s < 0) {
                    axis = -axis;
                }
                break;
            }
        }
    }
    const Vec2 perp(-axis.y(), axis.x());
    Vec2 lo(1e300, 1e300);
    Vec2 hi(-1e300, -1e300);
    for (auto& q : uv) {
        const Vec2 d = q - c;
        q = Vec2(d.dot(axis), d.dot(perp));
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
    const Vec2 ext = hi - lo;
    const double span = std::max(ext.x(), ext.y());
    const double target = 1.0 - 2.0 * margin;
    const double s = span > 0 ? target / span : 1.0;
    const Vec2 mid = 0.5 * (lo + hi);
    for (auto& q : uv) {
        q = Vec2(0.5, 0.5) + s * (q - mid);
        q = q.cwiseMax(Vec2(margin, margin)).cwiseMin(Vec2(1 - margin, 1 - margin));
    }
}

} // namespace

double margin_for_resolution(int resolution, double texels) {
    return resolution > 1 ? texels / static_cast<double>(resolution - 1) : 0.0;
}

UvChart tutte_embed(const TriMesh& mesh, const ChartOptions& options) {
    const Patch p = extract_patch(mesh);
    const auto loop = disk_boundary(p);
    const int nv = static_cast<int>(p.positions.size());

    std::vector<Vec2> uv(nv, Vec2::Zero());
    std::vector<std::uint8_t> fixed(nv, 0);
    std::vector<double> arc(loop.size() + 1, 0.0);
    for (std::size_t i = 0; i < loop.size(); ++i) {
        arc[i + 1] = arc[i] + (p.positions[loop[(i + 1) % loop.size()]] - p.positions[loop[i]]).norm();
    }
    const double radius = 0.5 - options.margin;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const double theta = 2.0 * kPi * arc[i] / arc.back();
        uv[loop[i]] = Vec2(0.5 + radius * std::cos(theta), 0.5 + radius * std::sin(theta));
        fixed[loop[i]] = 1;
    }

    std::vector<int> unknown(nv, -1);
    int n_unknown = 0;
    for (int v = 0; v < nv; ++v) {
        if (!fixed[v]) {
            unknown[v] = n_unknown++;
        }
    }
    if (n_unknown > 0) {
        std::vector<std::vector<int>> nbr(nv);
        for (const auto& f : p.faces) {
            for (int k = 0; k < 3; ++k) {
                nbr[f[k]].push_back(f[(k + 1) % 3]);
                nbr[f[(k + 1) % 3]].push_back(f[k]);
            }
        }
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_unknown, 2);
        for (int v = 0; v < nv; ++v) {
            if (fixed[v]) {
                continue;
            }
            auto& n = nbr[v];
            std::sort(n.begin(), n.end());
            n.erase(std::unique(n.begin(), n.end()), n.end());
            const int row = unknown[v];
            trip.emplace_back(row, row, static_cast<double>(n.size()));
            for (int w : n) {
                if (fixed[w]) {
                    rhs.row(row) += uv[w].transpose();
                } else {
                    trip.emplace_back(row, unknown[w], -1.0);
                }
            }
        }
        Eigen::SparseMatrix<double> a(n_unknown, n_unknown);
        a.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
        if (solver.info() != Eigen::Success) {
            throw NumericError("Tutte system is singular");
        }
        const Eigen::MatrixXd sol = solver.solve(rhs);
        for (int v = 0; v < nv; ++v) {
            if (!fixed[v]) {
                uv[v] = sol.row(unknown[v]).transpose();
            }
        }
    }

    const auto frames = build_frames(p);
    std::vector<Vec2> matched = uv;
    const double area3d =
        std::accumulate(frames.begin(), frames.end(), 0.0, [](double s, const auto& f) { return s + f.area; });
    const double s = std::sqrt(area3d / uv_area(p, uv));
    for (auto& q : matched) {
        q *= s;
    }
    return to_chart(p, uv, mesh.num_vertices(), options.margin, patch_energy(p, frames, matched));
}

UvChart arap_solve(const TriMesh& mesh, const UvChart& init, const ChartOptions& options,
                   ArapStats* stats) {
    if (options.max_iters < 1) {
        throw Error("arap_solve needs max_iters >= 1");
    }
    const Patch p = extract_patch(mesh);
    const auto frames = build_frames(p);
    const int nv = static_cast<int>(p.positions.size());
    std::vector<Vec2> uv = to_local(p, init.vertex_uv);

    // Match the total UV area to the surface area so the energy is in world units.
    double area3d = 0.0;
    for (const auto& f : frames) {
        area3d += f.area;
    }
    const double a_uv = uv_area(p, uv);
    if (!(a_uv > 0) || !(area3d > 0)) {
        throw NumericError("degenerate chart: zero area");
    }
    const double s0 = std::sqrt(area3d / a_uv);
    for (auto& q : uv) {
        q *= s0;
    }

    // Cotangent Laplacian, constant across iterations; vertex 0 is pinned.
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& f = p.faces[t];
        for (int k = 0; k < 3; ++k) {
            const int i = f[(k + 1) % 3];
            const int j = f[(k + 2) % 3];
            const double c = frames[t].cot[k];
            if (i != 0 && j != 0) {
                trip.emplace_back(i - 1, j - 1, -c);
                trip.emplace_back(j - 1, i - 1, -c);
            }
            if (i != 0) {
                trip.emplace_back(i - 1, i - 1, c);
            }
            if (j != 0) {
                trip.emplace_back(j - 1, j - 1, c);
            }
        }
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    if (nv > 1) {
        Eigen::SparseMatrix<double> lap(nv - 1, nv - 1);
        lap.setFromTriplets(trip.begin(), trip.end());
        solver.compute(lap);
        if (solver.info() != Eigen::Success) {
            throw NumericError("ARAP global system is singular");
        }
    }

    std::vector<Eigen::Matrix2d> rot(frames.size());
    auto local_step = [&]() {
        double e = 0.0;
        for (std::size_t t = 0; t < frames.size(); ++t) {
            const Eigen::Matrix2d j = jacobian(frames[t], p.faces[t], uv);
            rot[t] = closest_rotation(j);
            e += frames[t].area * (j - rot[t]).squaredNorm();
        }
        return e;
    };

    ArapStats local_stats;
    double energy = local_step();
    local_stats.energy.push_back(energy);
    for (int it = 0; it < options.max_iters && nv > 1; ++it) {
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nv - 1, 2);
        for (std::size_t t = 0; t < frames.size(); ++t) {
            const auto& f = p.faces[t];
            for (int k = 0; k < 3; ++k) {
                const int ci = (k + 1) % 3;
                const int cj = (k + 2) % 3;
                const int i = f[ci];
                const int j = f[cj];
                const double c = frames[t].cot[k];
                const Vec2 target = c * (rot[t] * (frames[t].x[ci] - frames[t].x[cj]));
                if (i != 0) {
                    rhs.row(i - 1) += target.transpose();
                    if (j == 0) {
                        rhs.row(i - 1) += c * uv[0].transpose();
                    }
                }
                if (j != 0) {
                    rhs.row(j - 1) -= target.transpose();
                    if (i == 0) {
                        rhs.row(j - 1) += c * uv[0].transpose();
                    }
                }
            }
        }
        const Eigen::MatrixXd sol = solver.solve(rhs);
        if (!sol.allFinite()) {
            throw NumericError("ARAP global solve produced non-finite UVs");
        }
        for (int v = 1; v < nv; ++v) {
            uv[v] = sol.row(v - 1).transpose();
        }
        const double prev = energy;
        energy = local_step();
        local_stats.energy.push_back(energy);
        local_stats.iterations = it + 1;
        if (prev <= 0.0 || (prev - energy) < options.tol * prev) {
            break;
        }
    }

    normalize_into_unit_square(uv, options.margin);
    if (stats) {
        *stats = std::move(local_stats);
    }
    return to_chart(p, uv, mesh.num_vertices(), options.margin, energy);
}

UvChart parameterize(const TriMesh& mesh, const ChartOptions& options, ArapStats* stats) {
    return arap_solve(mesh, tutte_embed(mesh, options), options, stats);
}

double arap_energy(const TriMesh& mesh, const std::vector<Vec2>& vertex_uv) {
    const Patch p = extract_patch(mesh);
    return patch_energy(p, build_frames(p), to_local(p, vertex_uv));
}

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d, double eps) {
    const double d1 = orient(c, d, a);
    const double d2 = orient(c, d, b);
    const double d3 = orient(a, b, c);
    const double d4 = orient(a, b, d);
    return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
           ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

bool strictly_inside(const Vec2& p, const std::array<Vec2, 3>& t, double eps) {
    const double s = orient(t[0], t[1], t[2]) > 0 ? 1.0 : -1.0;
    for (int k = 0; k < 3; ++k) {
        if (s * orient(t[k], t[(k + 1) % 3], p) <= eps) {
            return false;
        }
    }
    return true;
}

} // namespace

int count_uv_overlaps(const TriMesh& mesh, const UvChart& chart) {
    std::vector<std::array<Vec2, 3>> tris;
    std::vector<Face> faces;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        if (mesh.in_uv_area(f)) {
            const auto& t = mesh.face(f);
            tris.push_back({chart.vertex_uv[t[0]], chart.vertex_uv[t[1]], chart.vertex_uv[t[2]]});
            faces.push_back(t);
        }
    }
    const double eps = 1e-14;
    int overlaps = 0;
    for (std::size_t a = 0; a < tris.size(); ++a) {
        Eigen::AlignedBox2d ba;
        for (const auto& q : tris[a]) {
            ba.extend(q);
        }
        for (std::size_t b = a + 1; b < tris.size(); ++b) {
            Eigen::AlignedBox2d bb;
            for (const auto& q : tris[b]) {
                bb.extend(q);
            }
            if (!ba.intersects(bb)) {
                continue;
            }
            bool hit = false;
            for (int i = 0; i < 3 && !hit; ++i) {
                for (int j = 0; j < 3 && !hit; ++j) {
                    hit = segments_cross(tris[a][i], tris[a][(i + 1) % 3], tris[b][j], tris[b][(j + 1) % 3], eps);
                }
            }
            // Containment of a non-shared vertex, or identical centroids.
            for (int i = 0; i < 3 && !hit; ++i) {
                const bool shared = std::find(faces[a].begin(), faces[a].end(), faces[b][i]) != faces[a].end();
                if (!shared) {
                    hit = strictly_inside(tris[b][i], tris[a], eps);
                }
                const bool shared2 = std::find(faces[b].begin(), faces[b].end(), faces[a][i]) != faces[b].end();
                if (!hit && !shared2) {
                    hit = strictly_inside(tris[a][i], tris[b], eps);
                }
            }
            if (!hit) {
                const Vec2 ca = (tris[a][0] + tris[a][1] + tris[a][2]) / 3.0;
                const Vec2 cb = (tris[b][0] + tris[b][1] + tris[b][2]) / 3.0;
                hit = strictly_inside(ca, tris[b], eps) || strictly_inside(cb, tris[a], eps);
            }
            overlaps += hit ? 1 : 0;
        }
    }
    return overlaps;
}

Vec2 uv_to_texel(const Vec2& uv, int width, int height) {
    Vec2 c = uv;
    if (!(uv.x() >= 0.0 && uv.x() <= 1.0 && uv.y() >= 0.0 && uv.y() <= 1.0)) {
        g_clamp_count.fetch_add(1, std::memory_order_relaxed);
        c = uv.cwiseMax(Vec2(0, 0)).cwiseMin(Vec2(1, 1));
        if (!std::isfinite(c.x()) || !std::isfinite(c.y())) {
            c = Vec2::Zero();
        }
    }
    return Vec2(c.x() * (width - 1), c.y() * (height - 1));
}

std::uint64_t uv_clamp_count() { return g_clamp_count.load(std::memory_order_relaxed); }

} // namespace decalforge
