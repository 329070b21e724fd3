#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flowfield/types.hpp"

namespace flowfield {

class TriMesh;

/// Parametric head model: template, blendshape bases and skinning data.
///
/// Joint j rotates with theta[3j .. 3j+2]. joint_parents[0] == 0 marks the
/// root, and every other joint must reference an earlier joint so the
/// kinematic chain can be walked in index order.
struct ModelAssets {
  VertexArray template_vertices;  // L×3, meters
  FaceArray faces;                // F×3
  RowMatrix shape_basis;          // (3L)×|beta|
  RowMatrix expr_basis;           // (3L)×|psi|
  RowMatrix joint_regressor;      // J×L
  RowMatrix skin_weights;         // L×J
  std::optional<RowMatrix> pose_corrective_basis;  // (3L)×(9J)
  std::vector<int> joint_parents;                  // J

  Eigen::Index num_vertices() const { return template_vertices.rows(); }
  Eigen::Index num_faces() const { return faces.rows(); }
  Eigen::Index num_joints() const {
    return static_cast<Eigen::Index>(joint_parents.size());
  }
  Eigen::Index num_shape() const { return shape_basis.cols(); }
  Eigen::Index num_expr() const { return expr_basis.cols(); }
  Eigen::Index num_pose() const { return 3 * num_joints(); }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
};

struct MotionParams {
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;
  Eigen::VectorXd psi;
  std::optional<RigidTransform> root_transform;

  static MotionParams zeros(const ModelAssets& assets);

  /// Checks vector lengths against `assets`, finiteness and the root
  /// rotation. Throws ValidationError or NumericError.
  void validate_against(const ModelAssets& assets) const;
};

/// Where the target mesh takes its rigid root placement from.
enum class RootPolicy { Driving, Source, Identity };

/// Axis-angle to rotation matrix. Angles below 1e-8 use the first-order
/// expansion, so a zero vector yields the identity exactly.
Mat3 rodrigues(const Vec3& axis_angle);

/// Shape/expression blendshapes applied to the template, as L×3.
VertexArray blendshaped_vertices(const ModelAssets& assets,
                                 const MotionParams& params);

/// Joint locations regressed from the blendshaped rest vertices, J×3.
Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> regress_joints(
    const ModelAssets& assets, const VertexArray& rest);

TriMesh evaluate_mesh(const ModelAssets& assets, const MotionParams& params);

/// Source identity with driving pose and expression.
MotionParams assemble_target(const MotionParams& src, const MotionParams& dri,
                             RootPolicy policy = RootPolicy::Driving);

MotionParams apply_edit(const MotionParams& dri,
                        const Eigen::VectorXd& delta_theta,
                        const Eigen::VectorXd& delta_psi);

struct MiniModelOptions {
  /// Neighbour-averaging passes applied to the binary jaw/neck weights.
  /// Zero keeps the weights exactly binary.
  int skin_smoothing_passes = 2;
};

/// Deterministic synthetic head: an ellipsoidal icosphere with a neck root
/// joint and a jaw joint, 4 shape and 4 expression columns. All stored
/// values are exactly representable in 32-bit floats, so a save/load round
/// trip through the asset container is lossless.
ModelAssets make_mini_model(std::uint64_t seed, int n_subdiv,
                            const MiniModelOptions& options = {});

/// Stable 64-bit digests (FNV-1a over little-endian doubles) used to tag
/// encodings with the inputs they were computed from.
std::uint64_t digest(const ModelAssets& assets);
std::uint64_t digest(const MotionParams& params);

}  // namespace flowfield
