#include "flowfield/surfaceflow.hpp"

#include "flowfield/error.hpp"
#include "flowfield/parallel.hpp"

namespace flowfield {

void require_same_topology(const TriMesh& target, const TriMesh& source) {
  if (!target.same_topology(source))
    throw ValidationError(
        "surface field: target and source meshes differ in topology");
}

Vec3 surface_field(const Vec3& p_tgt, const IndexedMesh& target,
                   const TriMesh& source, const SurfaceFieldOptions& options) {
  if (!p_tgt.allFinite())
    throw NumericError("surface field: query point is not finite");
  const SurfacePoint hit = target.closest(p_tgt);
  const int f = hit.face;
  // Full topology comparison is O(F); per query only the matched face is
  // checked, flow_batch compares everything once up front.
  if (source.num_vertices() != target.mesh.num_vertices() ||
      source.num_faces() != target.mesh.num_faces() ||
      source.faces().row(f) != target.mesh.faces().row(f))
    throw ValidationError(
        "surface field: target and source meshes differ in topology");
  if (source.degenerate(f))
    throw NumericError("surface field: matched source face " +
                       std::to_string(f) + " is degenerate");
  const auto [sa, sb, sc] = source.triangle(f);

  if (!options.offset)
    return hit.bary[0] * sa + hit.bary[1] * sb + hit.bary[2] * sc;

  // Coordinates of p in the matched face's frame: barycentrics of its
  // projection onto the face plane (extrapolated when the projection falls
  // outside the face) plus the signed height along the face normal. This
  // reproduces p exactly when source == target.
  const auto [a, b, c] = target.mesh.triangle(f);
  const Vec3& n = target.mesh.normal(f);
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 r = p_tgt - a;
  const double d00 = e1.dot(e1);
  const double d01 = e1.dot(e2);
  const double d11 = e2.dot(e2);
  const double d20 = r.dot(e1);
  const double d21 = r.dot(e2);
  const double den = d00 * d11 - d01 * d01;
  const double v = (d11 * d20 - d01 * d21) / den;
  const double w = (d00 * d21 - d01 * d20) / den;
  const double u = 1.0 - v - w;
  const double h = n.dot(r);
  return u * sa + v * sb + w * sc + h * source.normal(f);
}

std::vector<FlowSample> flow_batch(std::span<const Vec3> points,
                                   const IndexedMesh& target,
                                   const TriMesh& source,
                                   const SurfaceFieldOptions& options,
                                   int workers) {
  require_same_topology(target.mesh, source);
  std::vector<FlowSample> out(points.size());
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (points.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t chunk) {
    const std::size_t end = std::min(points.size(), (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < end; ++i) {
      const Vec3 p_src = surface_field(points[i], target, source, options);
      out[i] = {points[i], p_src, p_src - points[i]};
    }
  });
  return out;
}

}  // namespace flowfield
