#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "flowfield/camera.hpp"
#include "flowfield/encoding.hpp"
#include "flowfield/headmodel.hpp"

namespace flowfield {

// Motion parameters: {"beta": [...], "theta": [...], "psi": [...],
//                     "root_R": [[3x3]], "root_t": [3]}   (root optional)
// Camera: {"K": [[3x3]], "H": [[3x4]], "width": W, "height": H}
//         H is camera-to-world [R | t].
// Config: {"N", "delta", "d_near", "d_far", "mode", "jitter_seed",
//          "sf_offset", "root_policy", "threads"}  (all optional)
//
// Schema violations raise ValidationError with a JSON-pointer-like path.

MotionParams params_from_json(const nlohmann::json& doc);
nlohmann::json params_to_json(const MotionParams& params);
MotionParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const MotionParams& params);

Camera camera_from_json(const nlohmann::json& doc);
nlohmann::json camera_to_json(const Camera& cam);
Camera load_camera(const std::filesystem::path& path);
void save_camera(const std::filesystem::path& path, const Camera& cam);

struct RunConfig {
  EncodingOptions encoding;
  int threads = 0;  // 0 = not set
};

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json parse_json_file(const std::filesystem::path& path);

/// One path per line; blank lines and '#' comments are skipped. Relative
/// entries resolve against the manifest's directory.
std::vector<std::filesystem::path> read_manifest(
    const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::filesystem::path>& entries);

}  // namespace flowfield
