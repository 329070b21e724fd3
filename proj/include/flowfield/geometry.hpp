#pragma once

#include <array>
#include <vector>

#include "flowfield/types.hpp"

namespace flowfield {

/// Triangle mesh with cached per-face unit normals (counter-clockwise
/// winding). Faces whose area vanishes are marked degenerate and carry a
/// zero normal.
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(VertexArray vertices, FaceArray faces);

  const VertexArray& vertices() const { return vertices_; }
  const FaceArray& faces() const { return faces_; }
  Eigen::Index num_vertices() const { return vertices_.rows(); }
  Eigen::Index num_faces() const { return faces_.rows(); }
  bool empty() const { return faces_.rows() == 0; }

  Vec3 vertex(Eigen::Index i) const { return vertices_.row(i).transpose(); }
  std::array<Vec3, 3> triangle(Eigen::Index f) const;
  const Vec3& normal(Eigen::Index f) const { return normals_[f]; }
  bool degenerate(Eigen::Index f) const { return degenerate_[f] != 0; }
  const std::vector<int>& degenerate_faces() const { return degenerate_list_; }

  bool same_topology(const TriMesh& other) const;
  Eigen::AlignedBox3d bounds() const;

 private:
  VertexArray vertices_;
  FaceArray faces_;
  std::vector<Vec3> normals_;
  std::vector<char> degenerate_;
  std::vector<int> degenerate_list_;
};

/// Voronoi region of a triangle that a closest point falls in.
enum class TriangleRegion {
  Vertex0,
  Vertex1,
  Vertex2,
  Edge01,
  Edge12,
  Edge20,
  Interior,
};

struct TriangleClosest {
  Vec3 point;
  Vec3 bary;  // weights of (a, b, c)
  TriangleRegion region;
};

/// Closest point on triangle (a, b, c) to p by region classification.
TriangleClosest closest_point_on_triangle(const Vec3& p, const Vec3& a,
                                          const Vec3& b, const Vec3& c);

struct SurfacePoint {
  int face = -1;
  Vec3 bary = Vec3::Zero();
  Vec3 point = Vec3::Zero();
  double signed_dist = 0.0;  // n_f · (p - point)
  double dist_sq = 0.0;      // |p - point|^2
};

/// Exhaustive nearest-face search. Ties on squared distance go to the
/// lowest face index; degenerate faces are skipped.
SurfacePoint closest_point_brute(const TriMesh& mesh, const Vec3& p);

/// Axis-aligned bounding volume hierarchy over the faces of a mesh.
class Bvh {
 public:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;   // child node indices, -1 for leaves
    int right = -1;
    int first = 0;   // leaf range into face_order()
    int count = 0;

    bool is_leaf() const { return left < 0; }
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& face_order() const { return face_order_; }
  /// Zero-area faces found at build time; they stay in the tree but are
  /// ignored by queries.
  const std::vector<int>& degenerate_faces() const { return degenerate_; }
  int leaf_size() const { return leaf_size_; }

  /// Traversal form: the binary tree collapsed to four children per node,
  /// float bounds rounded outward, one lane per child. A lane with
  /// count > 0 is a leaf over face_order()[child, child + count); count 0
  /// with child >= 0 points at another wide node; child -1 is unused and
  /// carries an empty box.
  struct WideNode {
    float lo[3][4];
    float hi[3][4];
    int child[4];
    int count[4];
  };
  /// Bounds of face_order()[k] in the same outward-rounded form.
  struct PackedFace {
    float lo[3];
    int face;
    float hi[3];
    int degenerate;
  };
  const std::vector<WideNode>& wide_nodes() const { return wide_nodes_; }
  const std::vector<PackedFace>& packed_faces() const { return packed_faces_; }
  /// Corners of face_order()[k], copied so leaves read contiguous memory.
  /// A Bvh is only valid for the mesh it was built from.
  const std::array<Vec3, 3>& corners(int k) const { return corners_[k]; }

 private:
  friend Bvh build_bvh(const TriMesh& mesh, int leaf_size);

  std::vector<Node> nodes_;
  std::vector<int> face_order_;
  std::vector<WideNode> wide_nodes_;
  std::vector<PackedFace> packed_faces_;
  std::vector<std::array<Vec3, 3>> corners_;
  std::vector<int> degenerate_;
  int leaf_size_ = 4;
};

/// Surface-area split over centroid order. Deterministic for a given
/// mesh. Throws ValidationError on an empty mesh.
Bvh build_bvh(const TriMesh& mesh, int leaf_size = 4);

/// Globally nearest surface point, bit-identical to closest_point_brute.
/// Throws NumericError for non-finite p.
SurfacePoint closest_point(const TriMesh& mesh, const Bvh& bvh, const Vec3& p);

/// A mesh bundled with its hierarchy.
struct IndexedMesh {
  TriMesh mesh;
  Bvh bvh;

  explicit IndexedMesh(TriMesh m);
  SurfacePoint closest(const Vec3& p) const {
    return closest_point(mesh, bvh, p);
  }
};

}  // namespace flowfield
