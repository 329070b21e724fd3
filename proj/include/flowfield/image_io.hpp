#pragma once

#include <filesystem>
#include <string>

#include "flowfield/camera.hpp"
#include "flowfield/encoding.hpp"

namespace flowfield {

/// Wavefront OBJ with `v` and `f` records only, 9 decimals per coordinate.
std::string format_obj(const TriMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_obj(const std::filesystem::path& path);

/// Binary 16-bit PGM (P5, big-endian samples). Depth maps linearly from
/// [0, max_depth] onto [0, 65535]; the mapping is repeated in a header
/// comment.
std::string format_depth_pgm(const DepthMap& depth, double max_depth);
void write_depth_pgm(const std::filesystem::path& path, const DepthMap& depth,
                     double max_depth);

struct FlowImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // row-major, 3 bytes per pixel
  double max_magnitude = 0.0;
};

/// Flows at or below this magnitude (m) render black.
inline constexpr double kVisFlowFloor = 1e-6;

/// Colours each pixel by the flow of its middle sample: hue follows the
/// direction in the camera image plane, value the magnitude normalised by
/// the per-image maximum.
FlowImage render_flow_image(const FlowEncoding& encoding, const Camera& cam);
std::string format_ppm(const FlowImage& image);
void write_flow_ppm(const std::filesystem::path& path, const FlowImage& image);

}  // namespace flowfield
