#include "flowfield/encoding.hpp"

#include <cmath>
#include <sstream>

#include "flowfield/error.hpp"
#include "flowfield/parallel.hpp"

namespace flowfield {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

const char* to_string(SamplingMode mode) {
  return mode == SamplingMode::DepthGuided ? "depth_guided" : "uniform";
}

SamplingMode parse_sampling_mode(const std::string& text) {
  if (text == "depth_guided") return SamplingMode::DepthGuided;
  if (text == "uniform") return SamplingMode::Uniform;
  throw ValidationError("mode: expected depth_guided or uniform, got '" + text +
                        "'");
}

const char* to_string(RootPolicy policy) {
  switch (policy) {
    case RootPolicy::Driving:
      return "driving";
    case RootPolicy::Source:
      return "source";
    case RootPolicy::Identity:
      return "identity";
  }
  return "driving";
}

RootPolicy parse_root_policy(const std::string& text) {
  if (text == "driving") return RootPolicy::Driving;
  if (text == "source") return RootPolicy::Source;
  if (text == "identity") return RootPolicy::Identity;
  throw ValidationError(
      "root_policy: expected driving, source or identity, got '" + text + "'");
}

void SamplingConfig::validate() const {
  if (samples < 1) throw ValidationError("config: N must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ValidationError("config: delta must be positive");
  if (!std::isfinite(d_near) || !std::isfinite(d_far) || !(d_near < d_far))
    throw ValidationError("config: d_near must be less than d_far");
}

DepthSamples sample_depths(const DepthMap& dmap, int u, int v,
                           const SamplingConfig& cfg, double origin_depth) {
  if (!dmap.in_bounds(u, v)) {
    std::ostringstream msg;
    msg << "sample_depths: pixel (" << u << ", " << v << ") outside "
        << dmap.width() << "x" << dmap.height();
    throw ValidationError(msg.str());
  }
  const double surface = dmap.at(u, v);
  double lo, hi;
  if (cfg.mode == SamplingMode::DepthGuided && surface > 0.0) {
    lo = surface - cfg.delta;
    hi = surface + cfg.delta;
  } else {
    lo = origin_depth + cfg.d_near;
    hi = origin_depth + cfg.d_far;
  }

  DepthSamples out;
  out.depths.resize(cfg.samples);
  const double stratum = (hi - lo) / cfg.samples;
  std::uint64_t state = 0;
  if (cfg.jitter_seed) {
    state = *cfg.jitter_seed;
    state ^= splitmix64(state) + static_cast<std::uint64_t>(v) * 0x1000003ULL +
             static_cast<std::uint64_t>(u);
  }
  for (int n = 0; n < cfg.samples; ++n) {
    double offset = 0.5;
    if (cfg.jitter_seed)
      offset = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    double d = lo + (n + offset) * stratum;
    if (d < kNearPlane) {
      d = kNearPlane;
      ++out.clamped;
    }
    out.depths[n] = d;
  }
  return out;
}

Vec3 FlowEncoding::flow(int u, int v, int sample) const {
  const std::size_t o = offset(u, v, sample);
  return {data[o], data[o + 1], data[o + 2]};
}

TargetSamples sample_target_points(const TriMesh& target, const Camera& cam,
                                   const SamplingConfig& cfg, int workers) {
  cfg.validate();
  cam.validate();
  TargetSamples out;
  out.depth = render_depth(target, cam, workers);
  const int n = cfg.samples;
  out.points.resize(static_cast<std::size_t>(cam.width) * cam.height * n);
  std::vector<std::size_t> clamped(cam.height, 0);
  const double origin = cam.origin_depth();
  parallel_for(static_cast<std::size_t>(cam.height), workers, [&](std::size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < cam.width; ++u) {
      const DepthSamples ds = sample_depths(out.depth, u, v, cfg, origin);
      clamped[row] += ds.clamped;
      const Vec2 pixel = pixel_center(u, v);
      const std::size_t base = (row * cam.width + u) * n;
      for (int s = 0; s < n; ++s)
        out.points[base + s] = backproject(cam, pixel, ds.depths[s]);
    }
  });
  for (std::size_t c : clamped) out.clamped += c;
  return out;
}

FlowEncoding encode_meshes(const TriMesh& target, const TriMesh& source,
                           const Camera& cam, const EncodingOptions& options) {
  require_same_topology(target, source);
  const IndexedMesh indexed(target);
  const SamplingConfig& cfg = options.sampling;
  const TargetSamples samples =
      sample_target_points(target, cam, cfg, options.workers);

  FlowEncoding enc;
  enc.meta.width = cam.width;
  enc.meta.height = cam.height;
  enc.meta.sampling = cfg;
  enc.meta.sf_offset = options.surface_field.offset;
  enc.meta.root_policy = options.root_policy;
  enc.meta.clamped_samples = samples.clamped;
  enc.meta.head_pixels = samples.depth.covered();

  const int n = cfg.samples;
  enc.data.resize(samples.points.size() * 3);
  parallel_for(static_cast<std::size_t>(cam.height), options.workers,
               [&](std::size_t row) {
                 const std::size_t begin = row * cam.width * n;
                 const std::size_t end = begin + static_cast<std::size_t>(cam.width) * n;
                 for (std::size_t i = begin; i < end; ++i) {
                   const Vec3& p = samples.points[i];
                   const Vec3 f =
                       surface_field(p, indexed, source, options.surface_field) - p;
                   if (!f.allFinite())
                     throw NumericError("encoding: non-finite flow");
                   for (int c = 0; c < 3; ++c)
                     enc.data[3 * i + c] = static_cast<float>(f[c]);
                 }
               });
  return enc;
}

FlowEncoding build_encoding(const ModelAssets& assets, const MotionParams& src,
                            const MotionParams& dri, const Camera& cam,
                            const EncodingOptions& options) {
  src.validate_against(assets);
  dri.validate_against(assets);
  const MotionParams tgt = assemble_target(src, dri, options.root_policy);
  const TriMesh mesh_tgt = evaluate_mesh(assets, tgt);
  const TriMesh mesh_src = evaluate_mesh(assets, src);
  FlowEncoding enc = encode_meshes(mesh_tgt, mesh_src, cam, options);
  enc.meta.assets_digest = digest(assets);
  enc.meta.src_digest = digest(src);
  enc.meta.dri_digest = digest(dri);
  return enc;
}

FlowEncoding build_edited_encoding(const ModelAssets& assets,
                                   const MotionParams& src,
                                   const MotionParams& dri,
                                   const Eigen::VectorXd& delta_theta,
                                   const Eigen::VectorXd& delta_psi,
                                   const Camera& cam,
                                   const EncodingOptions& options) {
  return build_encoding(assets, src, apply_edit(dri, delta_theta, delta_psi),
                        cam, options);
}

}  // namespace flowfield
