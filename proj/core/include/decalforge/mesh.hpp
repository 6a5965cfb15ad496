// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "decalforge/types.hpp"

namespace decalforge {

/// Indexed triangle mesh with per-vertex normals and a per-face flag marking
/// the faces that belong to the parameterized UV area.
///
/// Instances are immutable once built. Construction validates indices, drops
/// zero-area triangles, prunes unreferenced vertices and computes area-weighted
/// normals when none are supplied.
class TriMesh {
public:
    TriMesh() = default;

    static TriMesh from_arrays(std::vector<Vec3> vertices, std::vector<Face> faces,
                               std::vector<Vec3> normals = {});

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_faces() const { return static_cast<int>(faces_.size()); }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Vec3>& vertex_normals() const { return normals_; }
    const std::vector<std::uint8_t>& uv_area_flags() const { return in_uv_area_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    const Vec3& vertex(int v) const { return vertices_[v]; }
    const Face& face(int f) const { return faces_[f]; }
    bool in_uv_area(int f) const { return in_uv_area_[f] != 0; }
    bool has_uv_area() const;

    /// True when `v` is a corner of at least one UV-area face.
    bool vertex_in_uv_area(int v) const;

    Vec3 face_normal(int f) const;
    double face_area(int f) const;

    /// Copy of this mesh with the given UV-area flags (one per face).
    TriMesh with_uv_area(std::vector<std::uint8_t> flags) const;

    /// Copy with every vertex scaled about the origin.
    TriMesh scaled(double factor) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Vec3> normals_;
    std::vector<std::uint8_t> in_uv_area_;
    std::vector<std::uint8_t> vertex_in_area_;
    std::vector<std::string> warnings_;
};

/// Faces sharing an edge with each face, sorted by face index.
std::vector<std::vector<int>> face_edge_neighbors(const TriMesh& mesh);

/// Loads a Wavefront OBJ file (`v`, `vn`, `f`; polygons are fan-triangulated).
/// Throws ParseError naming the offending line.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// Flood fill across shared edges from `seed_face`, visiting neighbors in face
/// index order, until `max_faces` faces are collected or the component is
/// exhausted. The collected faces become the UV area of the returned mesh.
TriMesh select_region(const TriMesh& mesh, int seed_face, int max_faces);

/// Shortest path length over the edge graph with Euclidean edge weights.
/// Both vertices must touch the UV area.
double geodesic_distance(const TriMesh& mesh, int v_a, int v_b);

/// Single-source edge-graph distances to every vertex (infinity if unreachable).
std::vector<double> geodesic_distances_from(const TriMesh& mesh, int source);

/// True when the UV-area faces form a single edge-connected component.
bool uv_area_connected(const TriMesh& mesh);

/// Region sidecar: one face index per line.
void save_region(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh load_region(const TriMesh& mesh, const std::filesystem::path& path);

} // namespace decalforge
