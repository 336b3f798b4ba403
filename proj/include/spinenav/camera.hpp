#pragma once

#include "spinenav/errors.hpp"
#include "spinenav/geometry.hpp"

namespace spinenav {

/// Pinhole camera: u = fx * X/Z + cx, v = fy * Y/Z + cy.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0)) {
            throw ConfigError("camera focal lengths must be positive");
        }
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
            throw ConfigError("camera principal point must lie inside the image");
        }
    }

    Vec2 project(const Vec3& p_camera) const {
        return {fx * p_camera.x / p_camera.z + cx, fy * p_camera.y / p_camera.z + cy};
    }

    bool in_image(const Vec2& px) const {
        return px.x >= 0.0 && px.x < width && px.y >= 0.0 && px.y < height;
    }
};

} // namespace spinenav
