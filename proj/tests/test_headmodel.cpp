#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "flowfield/error.hpp"
#include "flowfield/geometry.hpp"
#include "flowfield/headmodel.hpp"
#include "flowfield/tensorio.hpp"

using namespace flowfield;

namespace {

MotionParams random_params(const ModelAssets& a, std::mt19937_64& rng,
                           double pose_scale) {
  MotionParams p = MotionParams::zeros(a);
  for (auto* v : {&p.beta, &p.psi})
    for (Eigen::Index i = 0; i < v->size(); ++i)
      (*v)[i] = testing::uniform(rng, -2.0, 2.0);
  for (Eigen::Index i = 0; i < p.theta.size(); ++i)
    p.theta[i] = testing::uniform(rng, -pose_scale, pose_scale);
  return p;
}

double max_abs_diff(const VertexArray& a, const VertexArray& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("mini model is deterministic and satisfies the asset invariants") {
  const ModelAssets a = make_mini_model(1, 2);
  const ModelAssets b = make_mini_model(1, 2);
  CHECK(serialize_assets(a) == serialize_assets(b));
  CHECK_NOTHROW(a.validate());
  CHECK(a.num_faces() == 320);
  CHECK(a.num_joints() == 2);
  CHECK(a.num_shape() == 4);
  CHECK(a.num_expr() == 4);
  CHECK_FALSE(a.pose_corrective_basis.has_value());
  for (Eigen::Index i = 0; i < a.num_vertices(); ++i)
    CHECK(std::abs(a.skin_weights.row(i).sum() - 1.0) <= 1e-9);
  // Smoothing produces some fractional weights.
  bool fractional = false;
  for (Eigen::Index i = 0; i < a.num_vertices(); ++i) {
    const double w = a.skin_weights(i, 1);
    fractional = fractional || (w > 0.0 && w < 1.0);
  }
  CHECK(fractional);

  const ModelAssets other = make_mini_model(2, 2);
  CHECK(serialize_assets(other) != serialize_assets(a));
  CHECK_THROWS_AS(make_mini_model(1, -1), UsageError);
}

TEST_CASE("asset validation rejects broken invariants") {
  const ModelAssets good = make_mini_model(3, 1);
  {
    ModelAssets a = good;
    a.faces(0, 1) = a.faces(0, 0);
    CHECK_THROWS_AS(a.validate(), ValidationError);
  }
  {
    ModelAssets a = good;
    a.faces(2, 2) = static_cast<int>(a.num_vertices());
    CHECK_THROWS_AS(a.validate(), ValidationError);
  }
  {
    ModelAssets a = good;
    a.skin_weights(5, 0) += 1e-6;
    CHECK_THROWS_WITH_AS(a.validate(), doctest::Contains("skin_weights[5]"),
                         ValidationError);
  }
  {
    ModelAssets a = good;
    a.skin_weights(7, 0) = -0.5;
    a.skin_weights(7, 1) = 1.5;
    CHECK_THROWS_AS(a.validate(), ValidationError);
  }
  {
    ModelAssets a = good;
    a.shape_basis.conservativeResize(a.shape_basis.rows() - 3, Eigen::NoChange);
    CHECK_THROWS_AS(a.validate(), ValidationError);
  }
  {
    ModelAssets a = good;
    a.joint_parents[1] = 1;
    CHECK_THROWS_AS(a.validate(), ValidationError);
  }
}

TEST_CASE("rodrigues") {
  CHECK(rodrigues(Vec3::Zero()) == Mat3::Identity());
  const Mat3 r = rodrigues(Vec3(0.0, 0.0, M_PI / 2));
  CHECK((r * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-15);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Vec3 w(testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3),
                 testing::uniform(rng, -3, 3));
    const Mat3 ref = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
    CHECK((rodrigues(w) - ref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(is_rotation(rodrigues(w)));
  }
  // Below the small-angle threshold the first-order form is used.
  const Vec3 tiny(1e-10, -2e-10, 5e-11);
  CHECK(std::isfinite(rodrigues(tiny).sum()));
  CHECK((rodrigues(tiny) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero parameters reproduce the template exactly") {
  const ModelAssets a = make_mini_model(1, 2);
  const TriMesh m = evaluate_mesh(a, MotionParams::zeros(a));
  CHECK(m.vertices() == a.template_vertices);
  CHECK(m.faces() == a.faces);
}

TEST_CASE("unit shape coefficient adds the first basis column") {
  const ModelAssets a = make_mini_model(1, 2);
  MotionParams p = MotionParams::zeros(a);
  p.beta[0] = 1.0;
  const TriMesh m = evaluate_mesh(a, p);
  for (Eigen::Index i = 0; i < a.num_vertices(); ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(m.vertices()(i, c) ==
            a.template_vertices(i, c) + a.shape_basis(3 * i + c, 0));
}

TEST_CASE("blendshapes are linear and zero pose is the identity") {
  const ModelAssets a = make_mini_model(7, 2);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    MotionParams p1 = random_params(a, rng, 0.0);
    MotionParams p2 = random_params(a, rng, 0.0);
    MotionParams sum = MotionParams::zeros(a);
    sum.beta = p1.beta + p2.beta;
    sum.psi = p1.psi + p2.psi;
    const VertexArray& t = a.template_vertices;
    const VertexArray d1 = evaluate_mesh(a, p1).vertices() - t;
    const VertexArray d2 = evaluate_mesh(a, p2).vertices() - t;
    const VertexArray ds = evaluate_mesh(a, sum).vertices() - t;
    CHECK(max_abs_diff(ds, d1 + d2) <= 1e-9);
    CHECK(evaluate_mesh(a, p1).vertices() == blendshaped_vertices(a, p1));
  }
}

TEST_CASE("jaw rotation matches a hand-applied rigid rotation") {
  const ModelAssets a = make_mini_model(1, 3, {.skin_smoothing_passes = 0});
  MotionParams p = MotionParams::zeros(a);
  p.theta.segment<3>(3) = Vec3(0.0, 0.0, M_PI / 2);
  const TriMesh m = evaluate_mesh(a, p);

  Vec3 joint = Vec3::Zero();
  for (Eigen::Index i = 0; i < a.num_vertices(); ++i)
    joint += a.joint_regressor(1, i) * a.template_vertices.row(i).transpose();
  Mat3 rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;

  int moved = 0;
  for (Eigen::Index i = 0; i < a.num_vertices(); ++i) {
    const Vec3 v = a.template_vertices.row(i).transpose();
    const double w = a.skin_weights(i, 1);
    REQUIRE((w == 0.0 || w == 1.0));
    const Vec3 expected = w == 1.0 ? Vec3(rz * (v - joint) + joint) : v;
    CHECK((m.vertex(i) - expected).cwiseAbs().maxCoeff() <= 1e-9);
    moved += w == 1.0;
  }
  CHECK(moved > 0);
  CHECK(moved < a.num_vertices());
}

TEST_CASE("root transform is applied rigidly after skinning") {
  const ModelAssets a = make_mini_model(5, 2);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    MotionParams p = random_params(a, rng, 0.5);
    const TriMesh base = evaluate_mesh(a, p);
    RigidTransform root;
    root.rotation = rodrigues(Vec3(testing::uniform(rng, -1, 1),
                                   testing::uniform(rng, -1, 1),
                                   testing::uniform(rng, -1, 1)));
    root.translation = Vec3(0.1, -0.2, 0.3);
    p.root_transform = root;
    const TriMesh moved = evaluate_mesh(a, p);
    CHECK(moved.faces() == a.faces);
    for (Eigen::Index i = 0; i < a.num_vertices(); ++i)
      CHECK((moved.vertex(i) - root.apply(base.vertex(i))).cwiseAbs().maxCoeff() <=
            1e-9);
  }
}

TEST_CASE("pose correctives follow the rotation deviation of each joint") {
  ModelAssets a = make_mini_model(2, 1);
  const Eigen::Index L = a.num_vertices();
  a.pose_corrective_basis = RowMatrix::Zero(3 * L, 9 * a.num_joints());
  // Column for entry (0,1) of the jaw's R - I moves every vertex along +x.
  const Eigen::Index col = 9 * 1 + 1;
  for (Eigen::Index i = 0; i < L; ++i) (*a.pose_corrective_basis)(3 * i, col) = 0.01;
  CHECK_NOTHROW(a.validate());

  const TriMesh rest = evaluate_mesh(a, MotionParams::zeros(a));
  CHECK(rest.vertices() == a.template_vertices);

  MotionParams p = MotionParams::zeros(a);
  p.theta.segment<3>(3) = Vec3(0.0, 0.0, 0.3);
  ModelAssets plain = a;
  plain.pose_corrective_basis.reset();
  const TriMesh with = evaluate_mesh(a, p);
  const TriMesh without = evaluate_mesh(plain, p);
  const double r01 = rodrigues(Vec3(0.0, 0.0, 0.3))(0, 1);
  // Neck-only vertices are unaffected by the jaw rotation itself.
  for (Eigen::Index i = 0; i < L; ++i) {
    if (a.skin_weights(i, 1) != 0.0) continue;
    CHECK(std::abs(with.vertex(i).x() - without.vertex(i).x() - 0.01 * r01) < 1e-12);
  }
}

TEST_CASE("evaluate_mesh rejects malformed parameters") {
  const ModelAssets a = make_mini_model(1, 1);
  MotionParams p = MotionParams::zeros(a);
  p.psi.resize(3);
  CHECK_THROWS_AS(evaluate_mesh(a, p), ValidationError);
  p = MotionParams::zeros(a);
  p.beta[1] = std::nan("");
  CHECK_THROWS_AS(evaluate_mesh(a, p), NumericError);
  p = MotionParams::zeros(a);
  p.root_transform = RigidTransform{};
  p.root_transform->rotation(0, 0) = 1.1;
  CHECK_THROWS_AS(evaluate_mesh(a, p), ValidationError);
}

TEST_CASE("assemble_target mixes source identity with driving motion") {
  const ModelAssets a = make_mini_model(1, 2);
  std::mt19937_64 rng(3);
  MotionParams src = random_params(a, rng, 0.3);
  MotionParams dri = random_params(a, rng, 0.3);
  dri.root_transform = RigidTransform{testing::yaw(20), Vec3(0.01, 0, 0)};

  const MotionParams tgt = assemble_target(src, dri);
  CHECK(tgt.beta == src.beta);
  CHECK(tgt.theta == dri.theta);
  CHECK(tgt.psi == dri.psi);
  REQUIRE(tgt.root_transform);
  CHECK(tgt.root_transform->rotation == dri.root_transform->rotation);

  CHECK_FALSE(assemble_target(src, dri, RootPolicy::Source).root_transform);
  CHECK_FALSE(assemble_target(src, dri, RootPolicy::Identity).root_transform);

  const MotionParams same = assemble_target(dri, dri);
  CHECK(same.beta == dri.beta);
  CHECK(same.theta == dri.theta);
  CHECK(same.psi == dri.psi);

  MotionParams manual = dri;
  manual.beta = src.beta;
  CHECK(evaluate_mesh(a, tgt).vertices() == evaluate_mesh(a, manual).vertices());

  MotionParams bad = dri;
  bad.beta.resize(2);
  CHECK_THROWS_AS(assemble_target(src, bad), ValidationError);
}

TEST_CASE("apply_edit adds deltas to pose and expression only") {
  const ModelAssets a = make_mini_model(1, 1);
  MotionParams dri = MotionParams::zeros(a);
  dri.psi[0] = 0.2;
  dri.beta[2] = 0.7;

  const MotionParams same = apply_edit(dri, Eigen::VectorXd::Zero(6),
                                       Eigen::VectorXd::Zero(4));
  CHECK(same.theta == dri.theta);
  CHECK(same.psi == dri.psi);

  Eigen::VectorXd dpsi = Eigen::VectorXd::Zero(4);
  dpsi[0] = 0.1;
  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(6);
  dtheta[4] = -0.25;
  const MotionParams edited = apply_edit(dri, dtheta, dpsi);
  CHECK(edited.psi[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(edited.psi.tail(3).isZero());
  CHECK(edited.theta[4] == -0.25);
  CHECK(edited.beta == dri.beta);

  CHECK_THROWS_AS(apply_edit(dri, dtheta, Eigen::VectorXd::Zero(5)), ValidationError);
  dpsi[1] = INFINITY;
  CHECK_THROWS_AS(apply_edit(dri, dtheta, dpsi), NumericError);
}

TEST_CASE("digests change with their inputs") {
  const ModelAssets a = make_mini_model(1, 1);
  MotionParams p = MotionParams::zeros(a);
  const auto d0 = digest(p);
  p.psi[3] = 1e-3;
  CHECK(digest(p) != d0);
  CHECK(digest(a) == digest(make_mini_model(1, 1)));
  CHECK(digest(a) != digest(make_mini_model(2, 1)));
}
