#include "flowfield/camera.hpp"

#include <cmath>

#include "flowfield/error.hpp"

namespace flowfield {

Mat3 Camera::intrinsics() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw ValidationError("camera: fx and fy must be positive and finite");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw ValidationError("camera: principal point must be finite");
  if (!is_rotation(camera_to_world.rotation))
    throw ValidationError(
        "camera: H rotation must be orthonormal with determinant +1 "
        "(within 1e-9)");
  if (!camera_to_world.translation.allFinite())
    throw ValidationError("camera: H translation must be finite");
  if (width <= 0 || height <= 0)
    throw ValidationError("camera: width and height must be positive");
}

double Camera::origin_depth() const {
  return -(camera_to_world.rotation.transpose() * camera_to_world.translation).z();
}

Vec2 pixel_center(int u, int v) { return {u + 0.5, v + 0.5}; }

Vec3 backproject(const Camera& cam, const Vec2& pixel, double depth) {
  if (!(depth > 0.0))
    throw ValidationError("backproject: depth must be positive");
  const Vec3 ray((pixel.x() - cam.cx) / cam.fx, (pixel.y() - cam.cy) / cam.fy,
                 1.0);
  return cam.camera_to_world.apply(depth * ray);
}

Projection project(const Camera& cam, const Vec3& world) {
  const RigidTransform& h = cam.camera_to_world;
  const Vec3 pc = h.rotation.transpose() * (world - h.translation);
  if (!(pc.z() > 0.0))
    throw NumericError("project: point is at or behind the camera plane");
  return {{cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy},
          pc.z()};
}

std::size_t DepthMap::covered() const {
  std::size_t n = 0;
  for (double d : data_) n += d > 0.0;
  return n;
}

}  // namespace flowfield
