#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowfield::testing {

Camera front_camera(int width, int height) {
  Camera cam;
  cam.fx = 120.0 * width / 64.0;
  cam.fy = 120.0 * height / 64.0;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.camera_to_world.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  cam.camera_to_world.translation = Vec3(0.0, 0.0, 0.6);
  cam.width = width;
  cam.height = height;
  return cam;
}

Mat3 yaw(double degrees) {
  return Eigen::AngleAxisd(degrees * M_PI / 180.0, Vec3::UnitY()).toRotationMatrix();
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Vec3 random_point_in(const Eigen::AlignedBox3d& box, double factor,
                     std::mt19937_64& rng) {
  const Vec3 c = box.center();
  const Vec3 half = 0.5 * factor * box.sizes();
  return {uniform(rng, c.x() - half.x(), c.x() + half.x()),
          uniform(rng, c.y() - half.y(), c.y() + half.y()),
          uniform(rng, c.z() - half.z(), c.z() + half.z())};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("flowfield_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double raycast_depth(const TriMesh& mesh, const Camera& cam, int u, int v) {
  const Vec3 origin = cam.camera_to_world.translation;
  const Vec3 dir_cam((u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0);
  const Vec3 dir = cam.camera_to_world.rotation * dir_cam;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
    const auto [a, b, c] = mesh.triangle(f);
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pv = dir.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-18) continue;
    const double inv = 1.0 / det;
    const Vec3 tv = origin - a;
    const double s = tv.dot(pv) * inv;
    if (s < 0.0 || s > 1.0) continue;
    const Vec3 qv = tv.cross(e1);
    const double t = dir.dot(qv) * inv;
    if (t < 0.0 || s + t > 1.0) continue;
    const double hit = e2.dot(qv) * inv;  // ray parameter == camera depth
    if (hit > 0.0) best = std::min(best, hit);
  }
  return std::isfinite(best) ? best : 0.0;
}

namespace {

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

}  // namespace

Vec3 closest_on_triangle_oracle(const Vec3& p, const Vec3& a, const Vec3& b,
                                const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a).normalized();
  const Vec3 q = p - n.dot(p - a) * n;
  // Inside test by consistent orientation of the sub-triangles.
  const bool inside = (b - a).cross(q - a).dot(n) >= 0.0 &&
                      (c - b).cross(q - b).dot(n) >= 0.0 &&
                      (a - c).cross(q - c).dot(n) >= 0.0;
  if (inside) return q;
  Vec3 best = closest_on_segment(p, a, b);
  for (const Vec3& cand : {closest_on_segment(p, b, c), closest_on_segment(p, c, a)})
    if ((p - cand).squaredNorm() < (p - best).squaredNorm()) best = cand;
  return best;
}

}  // namespace flowfield::testing
