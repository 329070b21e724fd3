#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowfield/camera.hpp"
#include "flowfield/headmodel.hpp"
#include "flowfield/surfaceflow.hpp"

namespace flowfield {

enum class SamplingMode { DepthGuided, Uniform };

const char* to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& text);

struct SamplingConfig {
  int samples = 20;        // N
  double delta = 0.01;     // half-width of the band around rendered depth
  double d_near = -0.65;   // fallback range, relative to the world origin
  double d_far = 0.65;
  SamplingMode mode = SamplingMode::DepthGuided;
  /// When set, each stratum is sampled at a seeded uniform offset instead
  /// of its midpoint.
  std::optional<std::uint64_t> jitter_seed;

  void validate() const;
};

/// Everything besides the sampling config that shapes an encoding.
struct EncodingOptions {
  SamplingConfig sampling;
  SurfaceFieldOptions surface_field;
  RootPolicy root_policy = RootPolicy::Driving;
  int workers = 1;
};

struct DepthSamples {
  std::vector<double> depths;
  int clamped = 0;  // samples raised to kNearPlane
};

/// Depths sampled along the ray of integer pixel (u, v). `origin_depth`
/// shifts the fallback range so it is centred on the world origin.
DepthSamples sample_depths(const DepthMap& dmap, int u, int v,
                           const SamplingConfig& cfg, double origin_depth = 0.0);

struct EncodingMetadata {
  int width = 0;
  int height = 0;
  SamplingConfig sampling;
  bool sf_offset = true;
  RootPolicy root_policy = RootPolicy::Driving;
  std::uint64_t assets_digest = 0;
  std::uint64_t src_digest = 0;
  std::uint64_t dri_digest = 0;
  std::size_t clamped_samples = 0;
  std::size_t head_pixels = 0;
};

/// H×W×3N flows, row-major over (v, u, channel) with channels ordered
/// sample-major: [f1x f1y f1z f2x ...].
struct FlowEncoding {
  std::vector<float> data;
  EncodingMetadata meta;

  int channels() const { return 3 * meta.sampling.samples; }
  std::size_t offset(int u, int v, int sample) const {
    return (static_cast<std::size_t>(v) * meta.width + u) * channels() +
           3 * static_cast<std::size_t>(sample);
  }
  Vec3 flow(int u, int v, int sample) const;
};

/// Sampled target points, H×W×N in the same order as the encoding.
struct TargetSamples {
  std::vector<Vec3> points;
  DepthMap depth;
  std::size_t clamped = 0;
};

TargetSamples sample_target_points(const TriMesh& target, const Camera& cam,
                                   const SamplingConfig& cfg, int workers = 1);

/// Flows for already evaluated meshes.
FlowEncoding encode_meshes(const TriMesh& target, const TriMesh& source,
                           const Camera& cam, const EncodingOptions& options);

FlowEncoding build_encoding(const ModelAssets& assets, const MotionParams& src,
                            const MotionParams& dri, const Camera& cam,
                            const EncodingOptions& options);

FlowEncoding build_edited_encoding(const ModelAssets& assets,
                                   const MotionParams& src,
                                   const MotionParams& dri,
                                   const Eigen::VectorXd& delta_theta,
                                   const Eigen::VectorXd& delta_psi,
                                   const Camera& cam,
                                   const EncodingOptions& options);

const char* to_string(RootPolicy policy);
RootPolicy parse_root_policy(const std::string& text);

}  // namespace flowfield
