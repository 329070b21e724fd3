#include "flowfield/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <sstream>

#include "flowfield/error.hpp"

namespace flowfield {

TriMesh::TriMesh(VertexArray vertices, FaceArray faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const Eigen::Index n = vertices_.rows();
  normals_.resize(faces_.rows());
  degenerate_.assign(faces_.rows(), 0);
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    for (int c = 0; c < 3; ++c) {
      if (faces_(f, c) < 0 || faces_(f, c) >= n) {
        std::ostringstream msg;
        msg << "mesh: face " << f << " references vertex " << faces_(f, c)
            << " outside [0, " << n << ")";
        throw ValidationError(msg.str());
      }
    }
    const auto [a, b, c] = triangle(f);
    const Vec3 cross = (b - a).cross(c - a);
    const double len = cross.norm();
    const double scale = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(),
                                   (a - c).squaredNorm()});
    if (!(len > 1e-14 * scale) || !std::isfinite(len)) {
      normals_[f] = Vec3::Zero();
      degenerate_[f] = 1;
      degenerate_list_.push_back(static_cast<int>(f));
    } else {
      normals_[f] = cross / len;
    }
  }
}

std::array<Vec3, 3> TriMesh::triangle(Eigen::Index f) const {
  return {vertex(faces_(f, 0)), vertex(faces_(f, 1)), vertex(faces_(f, 2))};
}

bool TriMesh::same_topology(const TriMesh& other) const {
  return num_vertices() == other.num_vertices() && faces_ == other.faces_;
}

Eigen::AlignedBox3d TriMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (Eigen::Index i = 0; i < vertices_.rows(); ++i)
    box.extend(vertices_.row(i).transpose());
  return box;
}

TriangleClosest closest_point_on_triangle(const Vec3& p, const Vec3& a,
                                          const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, {1.0, 0.0, 0.0}, TriangleRegion::Vertex0};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, {0.0, 1.0, 0.0}, TriangleRegion::Vertex1};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1.0 - v, v, 0.0}, TriangleRegion::Edge01};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, {0.0, 0.0, 1.0}, TriangleRegion::Vertex2};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1.0 - w, 0.0, w}, TriangleRegion::Edge20};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0.0, 1.0 - w, w}, TriangleRegion::Edge12};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, {1.0 - v - w, v, w}, TriangleRegion::Interior};
}

namespace detail {

// Shared by the exhaustive and hierarchical searches so both produce
// bit-identical candidates.
inline void consider_triangle(int f, const Vec3& a, const Vec3& b, const Vec3& c,
                              const Vec3& p, SurfacePoint& best) {
  const TriangleClosest hit = closest_point_on_triangle(p, a, b, c);
  const double d2 = (p - hit.point).squaredNorm();
  if (d2 < best.dist_sq || (d2 == best.dist_sq && f < best.face)) {
    best.face = f;
    best.bary = hit.bary;
    best.point = hit.point;
    best.dist_sq = d2;
  }
}

inline void consider_face(const TriMesh& mesh, int f, const Vec3& p,
                          SurfacePoint& best) {
  if (mesh.degenerate(f)) return;
  const auto [a, b, c] = mesh.triangle(f);
  consider_triangle(f, a, b, c, p, best);
}

inline SurfacePoint finish(const TriMesh& mesh, const Vec3& p, SurfacePoint best) {
  if (best.face < 0)
    throw NumericError("closest point: mesh has no non-degenerate faces");
  best.signed_dist = mesh.normal(best.face).dot(p - best.point);
  return best;
}

// Written with std::max so it compiles to branch-free min/max.
template <typename Packed>
inline double box_distance_sq(const Packed& box, const Vec3& p) {
  const double ex = std::max(std::max(box.lo[0] - p.x(), p.x() - box.hi[0]), 0.0);
  const double ey = std::max(std::max(box.lo[1] - p.y(), p.y() - box.hi[1]), 0.0);
  const double ez = std::max(std::max(box.lo[2] - p.z(), p.z() - box.hi[2]), 0.0);
  return ex * ex + ey * ey + ez * ez;
}

inline SurfacePoint empty_best() {
  SurfacePoint s;
  s.face = -1;
  s.dist_sq = std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace detail

SurfacePoint closest_point_brute(const TriMesh& mesh, const Vec3& p) {
  if (!p.allFinite()) throw NumericError("closest point: query is not finite");
  SurfacePoint best = detail::empty_best();
  for (Eigen::Index f = 0; f < mesh.num_faces(); ++f)
    detail::consider_face(mesh, static_cast<int>(f), p, best);
  return detail::finish(mesh, p, best);
}

SurfacePoint closest_point(const TriMesh& mesh, const Bvh& bvh, const Vec3& p) {
  if (!p.allFinite()) throw NumericError("closest point: query is not finite");
  const auto& nodes = bvh.wide_nodes();
  const auto& faces = bvh.packed_faces();
  SurfacePoint best = detail::empty_best();

  // The slack keeps faces whose rounded distance ties the current best
  // from being pruned, which the lowest-index tie-break depends on.
  auto prunable = [&](double box_d2) {
    return box_d2 > best.dist_sq * (1.0 + 1e-9) + 1e-30;
  };

  auto scan_leaf = [&](int first, int count) {
    for (int k = first; k < first + count; ++k) {
      const Bvh::PackedFace& f = faces[k];
      if (f.degenerate || prunable(detail::box_distance_sq(f, p))) continue;
      const auto& t = bvh.corners(k);
      detail::consider_triangle(f.face, t[0], t[1], t[2], p, best);
    }
  };
  auto lane_distances = [&](const Bvh::WideNode& node, double d[4]) {
    for (int i = 0; i < 4; ++i) {
      const double ex = std::max(std::max(node.lo[0][i] - p.x(), p.x() - node.hi[0][i]), 0.0);
      const double ey = std::max(std::max(node.lo[1][i] - p.y(), p.y() - node.hi[1][i]), 0.0);
      const double ez = std::max(std::max(node.lo[2][i] - p.z(), p.z() - node.hi[2][i]), 0.0);
      d[i] = ex * ex + ey * ey + ez * ez;
    }
  };

  // count > 0 marks a leaf range, otherwise `ref` is a wide node.
  struct Entry {
    int ref;
    int count;
    double box_d2;
  };
  Entry stack[256];
  int top = 0;
  stack[top++] = {0, 0, 0.0};
  while (top > 0) {
    const Entry e = stack[--top];
    if (prunable(e.box_d2)) continue;
    if (e.count > 0) {
      scan_leaf(e.ref, e.count);
      continue;
    }
    const Bvh::WideNode& node = nodes[e.ref];
    double d[4];
    lane_distances(node, d);
    // Sort lanes nearest first with a min/max network over keys whose low
    // bits hold the lane; non-negative doubles order like their bit
    // patterns. Order only affects speed, so the perturbed keys are fine.
    std::uint64_t key[4];
    for (int i = 0; i < 4; ++i)
      key[i] = (std::bit_cast<std::uint64_t>(d[i]) & ~std::uint64_t{3}) | static_cast<unsigned>(i);
    auto order = [&](int i, int j) {
      const std::uint64_t lo = std::min(key[i], key[j]);
      key[j] = std::max(key[i], key[j]);
      key[i] = lo;
    };
    order(0, 1);
    order(2, 3);
    order(0, 2);
    order(1, 3);
    order(1, 2);
    for (int i = 3; i >= 0; --i) {
      const int l = static_cast<int>(key[i] & 3);
      stack[top] = {node.child[l], node.count[l], d[l]};
      top += !prunable(d[l]);
    }
  }
  return detail::finish(mesh, p, best);
}

IndexedMesh::IndexedMesh(TriMesh m) : mesh(std::move(m)), bvh(build_bvh(mesh)) {}

}  // namespace flowfield
