#include <algorithm>
#include <cmath>
#include <vector>

#include "flowfield/camera.hpp"
#include "flowfield/parallel.hpp"

namespace flowfield {
namespace {

struct ScreenTriangle {
  Vec2 p[3];
  double inv_z[3];
  double area;
  bool inclusive[3];  // edge k runs p[k] -> p[(k+1)%3]
};

double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// With positive area the interior lies on the left of each directed edge
// (image y pointing down). Top edges are horizontal with the interior
// below, left edges have the interior towards +x.
bool top_left(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

}  // namespace

DepthMap render_depth(const TriMesh& mesh, const Camera& cam, int workers) {
  cam.validate();
  DepthMap depth(cam.width, cam.height);

  const RigidTransform& h = cam.camera_to_world;
  const Mat3 rt = h.rotation.transpose();
  std::vector<Vec3> cam_pts(mesh.num_vertices());
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i)
    cam_pts[i] = rt * (mesh.vertex(i) - h.translation);

  std::vector<ScreenTriangle> tris;
  std::vector<std::vector<int>> rows(cam.height);
  for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
    Vec3 c[3];
    bool usable = true;
    for (int k = 0; k < 3; ++k) {
      c[k] = cam_pts[mesh.faces()(f, k)];
      usable = usable && c[k].z() >= kNearPlane && c[k].allFinite();
    }
    if (!usable) continue;
    ScreenTriangle t;
    for (int k = 0; k < 3; ++k) {
      t.p[k] = {cam.fx * c[k].x() / c[k].z() + cam.cx,
                cam.fy * c[k].y() / c[k].z() + cam.cy};
      t.inv_z[k] = 1.0 / c[k].z();
    }
    t.area = edge(t.p[0], t.p[1], t.p[2]);
    if (t.area == 0.0 || !std::isfinite(t.area)) continue;
    if (t.area < 0.0) {
      std::swap(t.p[1], t.p[2]);
      std::swap(t.inv_z[1], t.inv_z[2]);
      t.area = -t.area;
    }
    for (int k = 0; k < 3; ++k) t.inclusive[k] = top_left(t.p[k], t.p[(k + 1) % 3]);

    const double min_y = std::min({t.p[0].y(), t.p[1].y(), t.p[2].y()});
    const double max_y = std::max({t.p[0].y(), t.p[1].y(), t.p[2].y()});
    const int v0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
    const int v1 = std::min(cam.height - 1, static_cast<int>(std::floor(max_y - 0.5)));
    if (v0 > v1) continue;
    const int index = static_cast<int>(tris.size());
    tris.push_back(t);
    for (int v = v0; v <= v1; ++v) rows[v].push_back(index);
  }

  parallel_for(static_cast<std::size_t>(cam.height), workers, [&](std::size_t row) {
    const int v = static_cast<int>(row);
    const double py = v + 0.5;
    for (int index : rows[v]) {
      const ScreenTriangle& t = tris[index];
      const double min_x = std::min({t.p[0].x(), t.p[1].x(), t.p[2].x()});
      const double max_x = std::max({t.p[0].x(), t.p[1].x(), t.p[2].x()});
      const int u0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
      const int u1 = std::min(cam.width - 1, static_cast<int>(std::floor(max_x - 0.5)));
      for (int u = u0; u <= u1; ++u) {
        const Vec2 p(u + 0.5, py);
        double w[3];
        bool inside = true;
        for (int k = 0; k < 3 && inside; ++k) {
          // Weight of vertex k comes from the opposite edge.
          const int e = (k + 1) % 3;
          w[k] = edge(t.p[e], t.p[(e + 1) % 3], p);
          inside = w[k] > 0.0 || (w[k] == 0.0 && t.inclusive[e]);
        }
        if (!inside) continue;
        const double inv_z =
            (w[0] * t.inv_z[0] + w[1] * t.inv_z[1] + w[2] * t.inv_z[2]) / t.area;
        const double z = 1.0 / inv_z;
        double& slot = depth.at(u, v);
        if (slot == 0.0 || z < slot) slot = std::max(z, kNearPlane);
      }
    }
  });
  return depth;
}

}  // namespace flowfield
