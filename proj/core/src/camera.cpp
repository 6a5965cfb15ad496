// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/camera.hpp"

#include <fmt/format.h>

namespace decalforge {

Camera Camera::from_transform(const Eigen::Matrix4d& cam_to_world, double fov_x, int width, int height) {
    Camera cam;
    cam.rotation = cam_to_world.topLeftCorner<3, 3>();
    cam.position = cam_to_world.topRightCorner<3, 1>();
    cam.width = width;
    cam.height = height;
    cam.focal = 0.5 * width / std::tan(0.5 * fov_x);
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.validate();
    return cam;
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width,
                       int height) {
    const Vec3 back = (eye - target).normalized();
    Vec3 right = up.cross(back);
    if (right.norm() < 1e-12) {
        right = Vec3(1, 0, 0).cross(back);
    }
    right.normalize();
    const Vec3 cam_up = back.cross(right);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 1>(0, 0) = right;
    m.block<3, 1>(0, 1) = cam_up;
    m.block<3, 1>(0, 2) = back;
    m.block<3, 1>(0, 3) = eye;
    return from_transform(m, fov_x, width, height);
}

Camera Camera::orbit(const Vec3& center, double azimuth_deg, double elevation_deg, double radius,
                     double fov_x_deg, int width, int height) {
    const double az = azimuth_deg * kPi / 180.0;
    const double el = elevation_deg * kPi / 180.0;
    const Vec3 dir(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
    const Vec3 up = std::abs(std::sin(el)) > 0.999999 ? Vec3(0, 0, -std::copysign(1.0, el)) : Vec3(0, 1, 0);
    return look_at(center + radius * dir, center, up, fov_x_deg * kPi / 180.0, width, height);
}

Eigen::Matrix4d Camera::transform() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = position;
    return m;
}

void Camera::validate() const {
    if (!rotation.allFinite() || !position.allFinite()) {
        throw GeometryError("camera transform is not finite");
    }
    const double err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-6) {
        throw GeometryError(fmt::format("camera rotation is not orthonormal (error {:.3g})", err));
    }
    if (!(focal > 0) || width <= 0 || height <= 0) {
        throw GeometryError("camera needs positive focal length and image size");
    }
}

Vec3 Camera::ray_direction(double x, double y) const {
    const Vec3 d((x - cx) / focal, -(y - cy) / focal, -1.0);
    return (rotation * d).normalized();
}

double Camera::fov_x() const { return 2.0 * std::atan(0.5 * width / focal); }

} // namespace decalforge
