#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace flowfield {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

/// L×3 vertex positions, one row per vertex.
using VertexArray = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// F×3 vertex indices, one row per triangle.
using FaceArray = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// Row-major dense matrix. Blendshape bases are stored as (3L)×K so that
/// the flat buffer matches an L×3×K tensor.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rotation followed by translation: x -> R x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/// True when R is orthonormal with determinant +1 within `tol`.
bool is_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace flowfield
