#include "flowfield/json_io.hpp"

#include <fstream>
#include <sstream>

#include "flowfield/error.hpp"
#include "flowfield/tensorio.hpp"

namespace flowfield {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  return j.get<double>();
}

Eigen::VectorXd vector(const json& doc, const std::string& key) {
  const std::string path = "/" + key;
  if (!doc.contains(key)) schema_error(path, "required field is missing");
  const json& j = doc[key];
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number(j[i], path + "/" + std::to_string(i));
  return v;
}

Eigen::MatrixXd matrix(const json& j, const std::string& path, int rows, int cols) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows))
    schema_error(path, "expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const std::string row_path = path + "/" + std::to_string(r);
    if (!j[r].is_array() || j[r].size() != static_cast<std::size_t>(cols))
      schema_error(row_path, "expected " + std::to_string(cols) + " columns");
    for (int c = 0; c < cols; ++c)
      m(r, c) = number(j[r][c], row_path + "/" + std::to_string(c));
  }
  return m;
}

json to_array(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

void require_object(const json& doc, const char* what) {
  if (!doc.is_object()) schema_error("", std::string(what) + " must be a JSON object");
}

void write_json(const std::filesystem::path& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

MotionParams params_from_json(const json& doc) {
  require_object(doc, "motion parameters");
  MotionParams p;
  p.beta = vector(doc, "beta");
  p.theta = vector(doc, "theta");
  p.psi = vector(doc, "psi");
  if (p.theta.size() % 3 != 0)
    schema_error("/theta", "length must be a multiple of 3 (axis-angle per joint)");
  const bool has_r = doc.contains("root_R");
  const bool has_t = doc.contains("root_t");
  if (has_r || has_t) {
    RigidTransform root;
    if (has_r) root.rotation = matrix(doc["root_R"], "/root_R", 3, 3);
    if (has_t) {
      const Eigen::MatrixXd t = matrix(json::array({doc["root_t"]}), "/root_t", 1, 3);
      root.translation = t.row(0).transpose();
    }
    if (!is_rotation(root.rotation))
      schema_error("/root_R",
                   "rotation must be orthonormal with determinant +1 (within 1e-9)");
    p.root_transform = root;
  }
  return p;
}

json params_to_json(const MotionParams& params) {
  json doc = {{"beta", to_array(params.beta)},
              {"theta", to_array(params.theta)},
              {"psi", to_array(params.psi)}};
  if (params.root_transform) {
    doc["root_R"] = to_rows(params.root_transform->rotation);
    doc["root_t"] = to_array(params.root_transform->translation);
  }
  return doc;
}

MotionParams load_params(const std::filesystem::path& path) {
  try {
    return params_from_json(parse_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ":" + e.what());
  }
}

void save_params(const std::filesystem::path& path, const MotionParams& params) {
  write_json(path, params_to_json(params));
}

Camera camera_from_json(const json& doc) {
  require_object(doc, "camera");
  if (!doc.contains("K")) schema_error("/K", "required field is missing");
  if (!doc.contains("H")) schema_error("/H", "required field is missing");
  const Eigen::MatrixXd k = matrix(doc["K"], "/K", 3, 3);
  if (k(0, 1) != 0.0 || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 ||
      k(2, 2) != 1.0)
    schema_error("/K", "expected [[fx,0,cx],[0,fy,cy],[0,0,1]]");
  const Eigen::MatrixXd h = matrix(doc["H"], "/H", 3, 4);

  Camera cam;
  cam.fx = k(0, 0);
  cam.fy = k(1, 1);
  cam.cx = k(0, 2);
  cam.cy = k(1, 2);
  cam.camera_to_world.rotation = h.leftCols<3>();
  cam.camera_to_world.translation = h.col(3);
  for (const char* key : {"width", "height"}) {
    if (!doc.contains(key)) schema_error(std::string("/") + key, "required field is missing");
    if (!doc[key].is_number_integer())
      schema_error(std::string("/") + key, "expected an integer");
  }
  cam.width = doc["width"].get<int>();
  cam.height = doc["height"].get<int>();
  if (!(cam.fx > 0.0)) schema_error("/K/0/0", "fx must be positive");
  if (!(cam.fy > 0.0)) schema_error("/K/1/1", "fy must be positive");
  if (!is_rotation(cam.camera_to_world.rotation))
    schema_error("/H", "rotation block must be orthonormal with determinant +1 "
                       "(within 1e-9)");
  if (cam.width <= 0) schema_error("/width", "must be positive");
  if (cam.height <= 0) schema_error("/height", "must be positive");
  cam.validate();
  return cam;
}

json camera_to_json(const Camera& cam) {
  Eigen::MatrixXd h(3, 4);
  h.leftCols<3>() = cam.camera_to_world.rotation;
  h.col(3) = cam.camera_to_world.translation;
  return {{"K", to_rows(cam.intrinsics())},
          {"H", to_rows(h)},
          {"width", cam.width},
          {"height", cam.height}};
}

Camera load_camera(const std::filesystem::path& path) {
  try {
    return camera_from_json(parse_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ":" + e.what());
  }
}

void save_camera(const std::filesystem::path& path, const Camera& cam) {
  write_json(path, camera_to_json(cam));
}

RunConfig config_from_json(const json& doc) {
  require_object(doc, "config");
  RunConfig cfg;
  SamplingConfig& s = cfg.encoding.sampling;
  if (doc.contains("N")) {
    if (!doc["N"].is_number_integer()) schema_error("/N", "expected an integer");
    s.samples = doc["N"].get<int>();
  }
  if (doc.contains("delta")) s.delta = number(doc["delta"], "/delta");
  if (doc.contains("d_near")) s.d_near = number(doc["d_near"], "/d_near");
  if (doc.contains("d_far")) s.d_far = number(doc["d_far"], "/d_far");
  if (doc.contains("mode")) {
    if (!doc["mode"].is_string()) schema_error("/mode", "expected a string");
    s.mode = parse_sampling_mode(doc["mode"].get<std::string>());
  }
  if (doc.contains("jitter_seed") && !doc["jitter_seed"].is_null()) {
    if (!doc["jitter_seed"].is_number_unsigned())
      schema_error("/jitter_seed", "expected a nonnegative integer or null");
    s.jitter_seed = doc["jitter_seed"].get<std::uint64_t>();
  }
  if (doc.contains("sf_offset")) {
    if (!doc["sf_offset"].is_boolean()) schema_error("/sf_offset", "expected a boolean");
    cfg.encoding.surface_field.offset = doc["sf_offset"].get<bool>();
  }
  if (doc.contains("root_policy")) {
    if (!doc["root_policy"].is_string()) schema_error("/root_policy", "expected a string");
    cfg.encoding.root_policy = parse_root_policy(doc["root_policy"].get<std::string>());
  }
  if (doc.contains("threads")) {
    if (!doc["threads"].is_number_integer() || doc["threads"].get<int>() < 0)
      schema_error("/threads", "expected a nonnegative integer");
    cfg.threads = doc["threads"].get<int>();
  }
  s.validate();
  return cfg;
}

json config_to_json(const RunConfig& config) {
  const SamplingConfig& s = config.encoding.sampling;
  json doc = {{"N", s.samples},
              {"delta", s.delta},
              {"d_near", s.d_near},
              {"d_far", s.d_far},
              {"mode", to_string(s.mode)},
              {"sf_offset", config.encoding.surface_field.offset},
              {"root_policy", to_string(config.encoding.root_policy)},
              {"threads", config.threads}};
  doc["jitter_seed"] = s.jitter_seed ? json(*s.jitter_seed) : json(nullptr);
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(parse_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ":" + e.what());
  }
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  const std::filesystem::path base = path.parent_path();
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::filesystem::path entry = line.substr(first, last - first + 1);
    out.push_back(entry.is_absolute() ? entry : base / entry);
  }
  return out;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::filesystem::path>& entries) {
  std::string text = "# flow encoding frames, one tensor path per line\n";
  for (const auto& e : entries) text += e.generic_string() + "\n";
  write_file_atomic(path, text);
}

}  // namespace flowfield
