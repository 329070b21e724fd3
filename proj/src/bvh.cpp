#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowfield/error.hpp"
#include "flowfield/geometry.hpp"

namespace flowfield {
namespace {

double area(const Eigen::AlignedBox3d& box) {
  const Vec3 d = box.sizes();
  return d.x() * d.y() + d.y() * d.z() + d.z() * d.x();
}

struct Builder {
  const TriMesh& mesh;
  int leaf_size;
  std::vector<Eigen::AlignedBox3d> face_boxes;
  std::vector<Vec3> centroids;
  std::vector<int> order;
  std::vector<Bvh::Node> nodes;
  int depth_limit = 100;

  int build(int first, int count, int depth) {
    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Eigen::AlignedBox3d box;
    Eigen::AlignedBox3d centroid_box;
    for (int k = first; k < first + count; ++k) {
      box.extend(face_boxes[order[k]]);
      centroid_box.extend(centroids[order[k]]);
    }
    nodes[index].box = box;

    const Vec3 extent = centroid_box.sizes();
    int axis = 0;
    if (extent.y() > extent[axis]) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    if (count <= leaf_size || extent[axis] <= 0.0 || depth >= depth_limit) {
      nodes[index].first = first;
      nodes[index].count = count;
      return index;
    }

    // Surface-area split: sweep each axis in (centroid, index) order and
    // keep the cut with the smallest area-weighted face count.
    double best_cost = std::numeric_limits<double>::infinity();
    int best_axis = axis;
    int half = count / 2;
    std::vector<int> sorted(order.begin() + first, order.begin() + first + count);
    std::vector<double> left_area(count);
    for (int ax = 0; ax < 3; ++ax) {
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        const double ca = centroids[a][ax];
        const double cb = centroids[b][ax];
        return ca < cb || (ca == cb && a < b);
      });
      Eigen::AlignedBox3d acc;
      for (int k = 0; k < count; ++k) {
        acc.extend(face_boxes[sorted[k]]);
        left_area[k] = area(acc);
      }
      acc.setEmpty();
      for (int k = count - 1; k >= 1; --k) {
        acc.extend(face_boxes[sorted[k]]);
        const double cost = left_area[k - 1] * k + area(acc) * (count - k);
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = ax;
          half = k;
        }
      }
    }
    axis = best_axis;
    auto begin = order.begin() + first;
    std::nth_element(begin, begin + half, begin + count, [&](int a, int b) {
      const double ca = centroids[a][axis];
      const double cb = centroids[b][axis];
      return ca < cb || (ca == cb && a < b);
    });
    const int left = build(first, half, depth + 1);
    const int right = build(first + half, count - half, depth + 1);
    nodes[index].left = left;
    nodes[index].right = right;
    return index;
  }
};

// Float bounds that still contain the double box.
void pack_box(const Eigen::AlignedBox3d& box, float lo[3], float hi[3]) {
  constexpr float inf = std::numeric_limits<float>::infinity();
  for (int k = 0; k < 3; ++k) {
    lo[k] = static_cast<float>(box.min()[k]);
    if (lo[k] > box.min()[k]) lo[k] = std::nextafter(lo[k], -inf);
    hi[k] = static_cast<float>(box.max()[k]);
    if (hi[k] < box.max()[k]) hi[k] = std::nextafter(hi[k], inf);
  }
}

// Replaces the inner child with the largest box by its two children until
// four lanes are filled or only leaves remain.
int collapse_node(const std::vector<Bvh::Node>& nodes, std::vector<int> lanes,
                  std::vector<Bvh::WideNode>& wide) {
  for (;;) {
    if (lanes.size() >= 4) break;
    int pick = -1;
    double pick_area = -1.0;
    for (int i = 0; i < static_cast<int>(lanes.size()); ++i) {
      const Bvh::Node& n = nodes[lanes[i]];
      if (!n.is_leaf() && area(n.box) > pick_area) {
        pick = i;
        pick_area = area(n.box);
      }
    }
    if (pick < 0) break;
    const Bvh::Node& n = nodes[lanes[pick]];
    lanes[pick] = n.left;
    lanes.insert(lanes.begin() + pick + 1, n.right);
  }

  const int index = static_cast<int>(wide.size());
  wide.emplace_back();
  Bvh::WideNode w{};
  for (int i = 0; i < 4; ++i) {
    w.child[i] = -1;
    w.count[i] = 0;
    for (int k = 0; k < 3; ++k) {
      w.lo[k][i] = std::numeric_limits<float>::infinity();
      w.hi[k][i] = -std::numeric_limits<float>::infinity();
    }
  }
  for (int i = 0; i < static_cast<int>(lanes.size()); ++i) {
    const Bvh::Node& n = nodes[lanes[i]];
    float lo[3], hi[3];
    pack_box(n.box, lo, hi);
    for (int k = 0; k < 3; ++k) {
      w.lo[k][i] = lo[k];
      w.hi[k][i] = hi[k];
    }
    if (n.is_leaf()) {
      w.child[i] = n.first;
      w.count[i] = n.count;
    } else {
      w.child[i] = collapse_node(nodes, {n.left, n.right}, wide);
    }
  }
  wide[index] = w;
  return index;
}

void collapse(const std::vector<Bvh::Node>& nodes, std::vector<Bvh::WideNode>& wide) {
  wide.reserve(nodes.size() / 2 + 1);
  // A single-leaf tree still gets a wide root with one lane.
  collapse_node(nodes, nodes[0].is_leaf() ? std::vector<int>{0}
                                          : std::vector<int>{nodes[0].left, nodes[0].right},
                wide);
}

}  // namespace

Bvh build_bvh(const TriMesh& mesh, int leaf_size) {
  if (mesh.empty()) throw ValidationError("bvh: mesh has no faces");
  if (leaf_size < 1) throw ValidationError("bvh: leaf size must be >= 1");
  const auto faces = static_cast<int>(mesh.num_faces());

  Builder b{mesh, leaf_size, {}, {}, {}, {}};
  b.face_boxes.resize(faces);
  b.centroids.resize(faces);
  for (int f = 0; f < faces; ++f) {
    const auto [p0, p1, p2] = mesh.triangle(f);
    b.face_boxes[f].extend(p0).extend(p1).extend(p2);
    b.centroids[f] = (p0 + p1 + p2) / 3.0;
  }
  b.order.resize(faces);
  std::iota(b.order.begin(), b.order.end(), 0);
  b.nodes.reserve(2 * static_cast<std::size_t>(faces) / leaf_size + 2);
  b.build(0, faces, 0);

  Bvh bvh;
  bvh.nodes_ = std::move(b.nodes);
  bvh.face_order_ = std::move(b.order);
  collapse(bvh.nodes_, bvh.wide_nodes_);
  bvh.packed_faces_.reserve(faces);
  bvh.corners_.reserve(faces);
  for (int f : bvh.face_order_) {
    Bvh::PackedFace& pf = bvh.packed_faces_.emplace_back();
    pack_box(b.face_boxes[f], pf.lo, pf.hi);
    pf.face = f;
    pf.degenerate = mesh.degenerate(f) ? 1 : 0;
    bvh.corners_.push_back(mesh.triangle(f));
  }
  bvh.degenerate_ = mesh.degenerate_faces();
  bvh.leaf_size_ = leaf_size;
  return bvh;
}

}  // namespace flowfield
