// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Geometry>

#include "decalforge/types.hpp"

namespace decalforge {

/// Pinhole camera. The camera looks down its local -Z axis with +X right and
/// +Y up; pixel (row, col) samples the image-plane point (col + 0.5, row + 0.5)
/// measured from the top-left corner.
struct Camera {
    Mat3 rotation = Mat3::Identity(); // camera-to-world
    Vec3 position = Vec3::Zero();
    double focal = 1.0; // pixels
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    /// Camera from a 4x4 camera-to-world matrix and a horizontal field of view.
    static Camera from_transform(const Eigen::Matrix4d& cam_to_world, double fov_x, int width, int height);

    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width,
                          int height);

    /// Orbit around `center`: azimuth about +Y measured from +Z, elevation
    /// above the XZ plane, both in degrees.
    static Camera orbit(const Vec3& center, double azimuth_deg, double elevation_deg, double radius,
                        double fov_x_deg, int width, int height);

    Eigen::Matrix4d transform() const;

    /// Throws GeometryError if the rotation is not orthonormal or the
    /// intrinsics are invalid.
    void validate() const;

    Vec3 to_camera(const Vec3& world) const { return rotation.transpose() * (world - position); }

    /// Unit world-space direction through the given image-plane point.
    Vec3 ray_direction(double x, double y) const;
    Vec3 pixel_ray(int row, int col) const { return ray_direction(col + 0.5, row + 0.5); }

    double fov_x() const;
};

} // namespace decalforge
