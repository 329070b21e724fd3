#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "flowfield/error.hpp"
#include "flowfield/headmodel.hpp"

namespace flowfield {
namespace {

constexpr int kShapeColumns = 4;
constexpr int kExprColumns = 4;
constexpr int kJointNeck = 0;
constexpr int kJointJaw = 1;

const Vec3 kHeadRadii{0.075, 0.1, 0.09};

double to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

// Portable uniform draw: the standard distributions are not specified
// bit-for-bit across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

struct Icosphere {
  std::vector<Vec3> points;  // unit length
  std::vector<std::array<int, 3>> faces;
};

Icosphere make_icosphere(int n_subdiv) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere s;
  s.points = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
              {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
              {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : s.points) p.normalize();
  s.faces = {{0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < n_subdiv; ++level) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      const int index = static_cast<int>(s.points.size());
      s.points.push_back((s.points[a] + s.points[b]).normalized());
      midpoints.emplace(key, index);
      return index;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(s.faces.size() * 4);
    for (const auto& f : s.faces) {
      const int ab = midpoint(f[0], f[1]);
      const int bc = midpoint(f[1], f[2]);
      const int ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    s.faces = std::move(next);
  }
  return s;
}

// Low-order polynomial features on the unit sphere.
std::array<double, 9> sphere_features(const Vec3& s) {
  return {1.0,
          s.x(),
          s.y(),
          s.z(),
          s.x() * s.y(),
          s.y() * s.z(),
          s.z() * s.x(),
          s.x() * s.x() - s.y() * s.y(),
          3.0 * s.z() * s.z() - 1.0};
}

std::vector<int> nearest_vertices(const VertexArray& v, const Vec3& target,
                                  int k) {
  std::vector<int> order(v.rows());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
  auto dist = [&](int i) { return (v.row(i).transpose() - target).squaredNorm(); };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist(a) < dist(b); });
  order.resize(std::min<std::size_t>(order.size(), k));
  return order;
}

}  // namespace

ModelAssets make_mini_model(std::uint64_t seed, int n_subdiv,
                            const MiniModelOptions& options) {
  if (n_subdiv < 0) throw UsageError("n_subdiv must be >= 0");
  if (n_subdiv > 7) throw UsageError("n_subdiv above 7 is not supported");
  Rng rng(seed);
  const Icosphere sphere = make_icosphere(n_subdiv);
  const auto L = static_cast<Eigen::Index>(sphere.points.size());

  ModelAssets a;
  a.template_vertices.resize(L, 3);
  for (Eigen::Index i = 0; i < L; ++i)
    for (int c = 0; c < 3; ++c)
      a.template_vertices(i, c) = to_f32(sphere.points[i][c] * kHeadRadii[c]);

  a.faces.resize(static_cast<Eigen::Index>(sphere.faces.size()), 3);
  for (std::size_t f = 0; f < sphere.faces.size(); ++f)
    for (int c = 0; c < 3; ++c)
      a.faces(static_cast<Eigen::Index>(f), c) = sphere.faces[f][c];

  // Shape: smooth radial bulges over the whole head.
  a.shape_basis = RowMatrix::Zero(3 * L, kShapeColumns);
  for (int k = 0; k < kShapeColumns; ++k) {
    std::array<double, 9> coeff;
    for (auto& c : coeff) c = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < L; ++i) {
      const Vec3& s = sphere.points[i];
      const auto phi = sphere_features(s);
      double g = 0.0;
      for (int m = 0; m < 9; ++m) g += coeff[m] * phi[m];
      const Vec3 dir = s.cwiseProduct(kHeadRadii).normalized();
      for (int c = 0; c < 3; ++c)
        a.shape_basis(3 * i + c, k) = to_f32(0.003 * g * dir[c]);
    }
  }

  // Expression: affine displacement fields concentrated around the mouth.
  const Vec3 mouth = Vec3(0.0, -0.45, 0.85).normalized();
  a.expr_basis = RowMatrix::Zero(3 * L, kExprColumns);
  for (int k = 0; k < kExprColumns; ++k) {
    Vec3 offset;
    Mat3 linear;
    for (int c = 0; c < 3; ++c) offset[c] = rng.uniform(-1.0, 1.0);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) linear(r, c) = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < L; ++i) {
      const Vec3& s = sphere.points[i];
      const double falloff = std::exp(-(s - mouth).squaredNorm() / 0.15);
      const Vec3 d = 0.006 * falloff * (offset + linear * s);
      for (int c = 0; c < 3; ++c) a.expr_basis(3 * i + c, k) = to_f32(d[c]);
    }
  }

  a.joint_parents = {0, kJointNeck};
  constexpr int kRegressorTaps = 8;
  a.joint_regressor = RowMatrix::Zero(2, L);
  const Vec3 neck_site(0.0, -0.1, -0.01);
  const Vec3 jaw_site(0.0, -0.06, 0.05);
  for (int i : nearest_vertices(a.template_vertices, neck_site, kRegressorTaps))
    a.joint_regressor(kJointNeck, i) = 1.0 / kRegressorTaps;
  for (int i : nearest_vertices(a.template_vertices, jaw_site, kRegressorTaps))
    a.joint_regressor(kJointJaw, i) = 1.0 / kRegressorTaps;

  std::vector<double> jaw(L);
  for (Eigen::Index i = 0; i < L; ++i) {
    const Vec3& s = sphere.points[i];
    jaw[i] = (s.y() < -0.2 && s.z() > 0.1) ? 1.0 : 0.0;
  }
  if (options.skin_smoothing_passes > 0) {
    std::vector<std::vector<int>> neighbours(L);
    for (const auto& f : sphere.faces)
      for (int c = 0; c < 3; ++c) {
        neighbours[f[c]].push_back(f[(c + 1) % 3]);
        neighbours[f[(c + 1) % 3]].push_back(f[c]);
      }
    for (auto& n : neighbours) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    for (int pass = 0; pass < options.skin_smoothing_passes; ++pass) {
      std::vector<double> next(L);
      for (Eigen::Index i = 0; i < L; ++i) {
        double sum = jaw[i];
        for (int n : neighbours[i]) sum += jaw[n];
        next[i] = sum / static_cast<double>(neighbours[i].size() + 1);
      }
      jaw = std::move(next);
    }
  }
  // Dyadic weights (16 fractional bits) keep every row summing to exactly
  // one, before and after 32-bit storage.
  a.skin_weights.resize(L, 2);
  for (Eigen::Index i = 0; i < L; ++i) {
    const double q = std::round(jaw[i] * 65536.0) / 65536.0;
    a.skin_weights(i, kJointJaw) = q;
    a.skin_weights(i, kJointNeck) = 1.0 - q;
  }

  a.validate();
  return a;
}

}  // namespace flowfield
