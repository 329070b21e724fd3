#pragma once

#include <utility>
#include <vector>

#include "flowfield/geometry.hpp"

namespace flowfield {

/// Pinhole camera. `camera_to_world` maps camera-frame points (x right,
/// y down, z forward) into the world frame. Continuous pixel coordinates
/// have their origin at the top-left image corner, so the centre of
/// integer pixel (u, v) is at (u + 0.5, v + 0.5).
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  RigidTransform camera_to_world;
  int width = 0;
  int height = 0;

  Mat3 intrinsics() const;
  void validate() const;

  /// Camera-frame depth of the world origin.
  double origin_depth() const;
};

/// Smallest depth a rendered or sampled point may take.
inline constexpr double kNearPlane = 1e-6;

Vec2 pixel_center(int u, int v);

/// World point at camera depth `depth` along the ray through `pixel`.
/// Throws ValidationError for depth <= 0.
Vec3 backproject(const Camera& cam, const Vec2& pixel, double depth);

struct Projection {
  Vec2 pixel;
  double depth;
};

/// Inverse of backproject. Throws NumericError for points at or behind
/// the camera plane.
Projection project(const Camera& cam, const Vec3& world);

/// Row-major H×W depth image; 0 marks pixels without head surface.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, 0.0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int u, int v) const { return data_[index(u, v)]; }
  double& at(int u, int v) { return data_[index(u, v)]; }
  bool in_bounds(int u, int v) const {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }
  const std::vector<double>& data() const { return data_; }
  std::size_t covered() const;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width_ + u;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Z-buffer of the nearest camera depth over both face orientations,
/// sampled at pixel centres with a top-left fill rule. Depth is
/// interpolated perspective-correctly. Triangles with a vertex closer than
/// kNearPlane are dropped (no clipping).
DepthMap render_depth(const TriMesh& mesh, const Camera& cam, int workers = 1);

}  // namespace flowfield
