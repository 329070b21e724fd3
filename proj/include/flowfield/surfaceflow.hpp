#pragma once

#include <span>
#include <vector>

#include "flowfield/geometry.hpp"

namespace flowfield {

struct SurfaceFieldOptions {
  /// Carry the signed distance to the matched target face over to the
  /// source face. When off, points land exactly on the source surface.
  bool offset = true;
};

struct FlowSample {
  Vec3 p_tgt;
  Vec3 p_src;
  Vec3 flow;  // p_src - p_tgt
};

/// Maps a point near `target` to the corresponding point near `source`
/// through the nearest target face. Both meshes must share topology.
Vec3 surface_field(const Vec3& p_tgt, const IndexedMesh& target,
                   const TriMesh& source, const SurfaceFieldOptions& options = {});

std::vector<FlowSample> flow_batch(std::span<const Vec3> points,
                                   const IndexedMesh& target,
                                   const TriMesh& source,
                                   const SurfaceFieldOptions& options = {},
                                   int workers = 1);

/// Throws ValidationError when the two meshes differ in face topology.
void require_same_topology(const TriMesh& target, const TriMesh& source);

}  // namespace flowfield
