#include "flowfield/headmodel.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "flowfield/error.hpp"
#include "flowfield/geometry.hpp"

namespace flowfield {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

void require_length(const Eigen::VectorXd& v, Eigen::Index expected,
                    const char* name) {
  if (v.size() != expected) {
    std::ostringstream msg;
    msg << name << ": expected " << expected << " values, got " << v.size();
    throw ValidationError(msg.str());
  }
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void real(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
    bytes(le, 8);
  }
  void integer(std::int64_t x) { real(static_cast<double>(x)); }
  template <typename Derived>
  void matrix(const Eigen::DenseBase<Derived>& m) {
    integer(m.rows());
    integer(m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        real(static_cast<double>(m(r, c)));
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if (((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

void ModelAssets::validate() const {
  const Eigen::Index L = num_vertices();
  const Eigen::Index J = num_joints();
  require(L > 0, "assets: template has no vertices");
  require(faces.rows() > 0, "assets: no faces");
  require(all_finite(template_vertices), "assets: template_vertices not finite");
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const int a = faces(f, 0), b = faces(f, 1), c = faces(f, 2);
    if (a < 0 || b < 0 || c < 0 || a >= L || b >= L || c >= L) {
      std::ostringstream msg;
      msg << "assets: faces[" << f << "] index out of range";
      throw ValidationError(msg.str());
    }
    if (a == b || b == c || a == c) {
      std::ostringstream msg;
      msg << "assets: faces[" << f << "] repeats a vertex index";
      throw ValidationError(msg.str());
    }
  }
  require(shape_basis.rows() == 3 * L, "assets: shape_basis must have 3L rows");
  require(expr_basis.rows() == 3 * L, "assets: expr_basis must have 3L rows");
  require(all_finite(shape_basis), "assets: shape_basis not finite");
  require(all_finite(expr_basis), "assets: expr_basis not finite");
  require(J > 0, "assets: at least one joint is required");
  require(joint_parents[0] == 0, "assets: joint_parents[0] must be the root (0)");
  for (Eigen::Index j = 1; j < J; ++j) {
    if (joint_parents[j] < 0 || joint_parents[j] >= j) {
      std::ostringstream msg;
      msg << "assets: joint_parents[" << j << "] must reference an earlier joint";
      throw ValidationError(msg.str());
    }
  }
  require(joint_regressor.rows() == J && joint_regressor.cols() == L,
          "assets: joint_regressor must be J×L");
  require(all_finite(joint_regressor), "assets: joint_regressor not finite");
  require(skin_weights.rows() == L && skin_weights.cols() == J,
          "assets: skin_weights must be L×J");
  for (Eigen::Index i = 0; i < L; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
      const double w = skin_weights(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        std::ostringstream msg;
        msg << "assets: skin_weights[" << i << "] must be nonnegative";
        throw ValidationError(msg.str());
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "assets: skin_weights[" << i << "] sums to " << sum
          << ", expected 1 within 1e-9";
      throw ValidationError(msg.str());
    }
  }
  if (pose_corrective_basis) {
    require(pose_corrective_basis->rows() == 3 * L &&
                pose_corrective_basis->cols() == 9 * J,
            "assets: pose_corrective_basis must be 3L×9J");
    require(all_finite(*pose_corrective_basis),
            "assets: pose_corrective_basis not finite");
  }
}

MotionParams MotionParams::zeros(const ModelAssets& assets) {
  MotionParams p;
  p.beta = Eigen::VectorXd::Zero(assets.num_shape());
  p.theta = Eigen::VectorXd::Zero(assets.num_pose());
  p.psi = Eigen::VectorXd::Zero(assets.num_expr());
  return p;
}

void MotionParams::validate_against(const ModelAssets& assets) const {
  require_length(beta, assets.num_shape(), "beta");
  require_length(theta, assets.num_pose(), "theta");
  require_length(psi, assets.num_expr(), "psi");
  if (!beta.allFinite() || !theta.allFinite() || !psi.allFinite())
    throw NumericError("motion parameters contain non-finite values");
  if (root_transform) {
    if (!root_transform->translation.allFinite())
      throw NumericError("root translation is not finite");
    if (!is_rotation(root_transform->rotation))
      throw ValidationError(
          "root_R must be orthonormal with determinant +1 (within 1e-9)");
  }
}

Mat3 rodrigues(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-8) return Mat3::Identity() + skew(axis_angle);
  const Mat3 k = skew(axis_angle / angle);
  return Mat3::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * (k * k);
}

VertexArray blendshaped_vertices(const ModelAssets& assets,
                                 const MotionParams& params) {
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(
      assets.template_vertices.data(), assets.template_vertices.size());
  if (params.beta.size() > 0) flat.noalias() += assets.shape_basis * params.beta;
  if (params.psi.size() > 0) flat.noalias() += assets.expr_basis * params.psi;
  VertexArray out(assets.num_vertices(), 3);
  Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) = flat;
  return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> regress_joints(
    const ModelAssets& assets, const VertexArray& rest) {
  return assets.joint_regressor * rest;
}

TriMesh evaluate_mesh(const ModelAssets& assets, const MotionParams& params) {
  params.validate_against(assets);
  const Eigen::Index L = assets.num_vertices();
  const Eigen::Index J = assets.num_joints();

  VertexArray rest = blendshaped_vertices(assets, params);
  const auto joints = regress_joints(assets, rest);

  std::vector<Mat3> local(J);
  for (Eigen::Index j = 0; j < J; ++j)
    local[j] = rodrigues(params.theta.segment<3>(3 * j));

  if (assets.pose_corrective_basis) {
    Eigen::VectorXd feature(9 * J);
    for (Eigen::Index j = 0; j < J; ++j) {
      const Mat3 d = local[j] - Mat3::Identity();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) feature(9 * j + 3 * r + c) = d(r, c);
    }
    Eigen::Map<Eigen::VectorXd>(rest.data(), rest.size()).noalias() +=
        *assets.pose_corrective_basis * feature;
  }

  // Skinning transform of each joint, x -> R x + t, composed down the
  // chain from rotations about the rest joint locations. Kept in
  // deviation-from-identity form so a zero pose leaves the rest vertices
  // bit-identical.
  std::vector<Mat3> skin_r(J);
  std::vector<Vec3> skin_t(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const Vec3 joint = joints.row(j).transpose();
    const Vec3 about_joint = joint - local[j] * joint;
    if (j == 0) {
      skin_r[j] = local[j];
      skin_t[j] = about_joint;
    } else {
      const int p = assets.joint_parents[j];
      skin_r[j] = skin_r[p] * local[j];
      skin_t[j] = skin_r[p] * about_joint + skin_t[p];
    }
  }
  std::vector<Mat3> dev_r(J);
  for (Eigen::Index j = 0; j < J; ++j) dev_r[j] = skin_r[j] - Mat3::Identity();
  const std::vector<Vec3>& dev_t = skin_t;

  VertexArray posed(L, 3);
  for (Eigen::Index i = 0; i < L; ++i) {
    const Vec3 v = rest.row(i).transpose();
    Vec3 delta = Vec3::Zero();
    for (Eigen::Index j = 0; j < J; ++j) {
      const double w = assets.skin_weights(i, j);
      if (w == 0.0) continue;
      delta += w * (dev_r[j] * v + dev_t[j]);
    }
    Vec3 out = v + delta;
    if (params.root_transform) out = params.root_transform->apply(out);
    posed.row(i) = out.transpose();
  }
  return TriMesh(std::move(posed), assets.faces);
}

MotionParams assemble_target(const MotionParams& src, const MotionParams& dri,
                             RootPolicy policy) {
  if (src.beta.size() != dri.beta.size() ||
      src.theta.size() != dri.theta.size() ||
      src.psi.size() != dri.psi.size())
    throw ValidationError(
        "source and driving parameters have different dimensions");
  MotionParams out;
  out.beta = src.beta;
  out.theta = dri.theta;
  out.psi = dri.psi;
  switch (policy) {
    case RootPolicy::Driving:
      out.root_transform = dri.root_transform;
      break;
    case RootPolicy::Source:
      out.root_transform = src.root_transform;
      break;
    case RootPolicy::Identity:
      break;
  }
  return out;
}

MotionParams apply_edit(const MotionParams& dri,
                        const Eigen::VectorXd& delta_theta,
                        const Eigen::VectorXd& delta_psi) {
  require_length(delta_theta, dri.theta.size(), "delta_theta");
  require_length(delta_psi, dri.psi.size(), "delta_psi");
  if (!delta_theta.allFinite() || !delta_psi.allFinite())
    throw NumericError("edit deltas contain non-finite values");
  MotionParams out = dri;
  out.theta += delta_theta;
  out.psi += delta_psi;
  return out;
}

std::uint64_t digest(const ModelAssets& assets) {
  Fnv1a h;
  h.matrix(assets.template_vertices);
  h.matrix(assets.faces);
  h.matrix(assets.shape_basis);
  h.matrix(assets.expr_basis);
  h.matrix(assets.joint_regressor);
  h.matrix(assets.skin_weights);
  if (assets.pose_corrective_basis) h.matrix(*assets.pose_corrective_basis);
  for (int p : assets.joint_parents) h.integer(p);
  return h.value();
}

std::uint64_t digest(const MotionParams& params) {
  Fnv1a h;
  h.matrix(params.beta);
  h.matrix(params.theta);
  h.matrix(params.psi);
  if (params.root_transform) {
    h.matrix(params.root_transform->rotation);
    h.matrix(params.root_transform->translation);
  }
  return h.value();
}

}  // namespace flowfield
