// flowfield: evaluate head models and build depth-guided 3D flow encodings.
//
// Exit codes: 0 ok, 2 usage, 3 validation, 4 I/O, 5 numeric.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "flowfield/encoding.hpp"
#include "flowfield/error.hpp"
#include "flowfield/geometry.hpp"
#include "flowfield/headmodel.hpp"
#include "flowfield/image_io.hpp"
#include "flowfield/json_io.hpp"
#include "flowfield/parallel.hpp"
#include "flowfield/tensorio.hpp"

namespace fs = std::filesystem;
using namespace flowfield;

namespace {

struct GenArgs {
  std::uint64_t seed = 1;
  int subdiv = 3;
  int smoothing = MiniModelOptions{}.skin_smoothing_passes;
  std::string out;
  bool force = false;
};

struct EvalArgs {
  std::string assets;
  std::string params;
  std::string out;
};

struct EncodeArgs {
  std::string assets;
  std::string src_params;
  std::string dri_params;
  std::string dri_manifest;
  std::string delta_theta;
  std::string delta_psi;
  std::string camera;
  std::string config;
  std::string out;
  std::string mode;
  std::string emit_depth;
  std::string emit_vis;
  int threads = 0;
};

struct InspectArgs {
  std::string path;
};

// "0.1,0,-0.2" or "@file.json" holding a JSON array.
std::optional<Eigen::VectorXd> parse_delta(const std::string& text,
                                           const char* flag) {
  if (text.empty()) return std::nullopt;
  std::vector<double> values;
  if (text.front() == '@') {
    const nlohmann::json doc = parse_json_file(text.substr(1));
    if (!doc.is_array())
      throw ValidationError(std::string(flag) + ": expected a JSON array");
    for (const auto& v : doc) {
      if (!v.is_number())
        throw ValidationError(std::string(flag) + ": expected numbers");
      values.push_back(v.get<double>());
    }
  } else {
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos)
          throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
      }
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

int run_gen(const GenArgs& a) {
  if (a.subdiv < 0) throw UsageError("--subdiv must be >= 0");
  if (a.smoothing < 0) throw UsageError("--smoothing must be >= 0");
  if (fs::exists(a.out) && !a.force)
    throw IoError("'" + a.out + "' exists; pass --force to overwrite");
  const ModelAssets assets =
      make_mini_model(a.seed, a.subdiv, {.skin_smoothing_passes = a.smoothing});
  save_assets(a.out, assets);
  std::cout << "wrote " << a.out << ": " << assets.num_vertices() << " vertices, "
            << assets.num_faces() << " faces\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  const ModelAssets assets = load_assets(a.assets);
  const MotionParams params = load_params(a.params);
  write_obj(a.out, evaluate_mesh(assets, params));
  return 0;
}

fs::path frame_path(const fs::path& base, std::size_t frame, const char* ext) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "_%05zu%s", frame, ext);
  fs::path out = base;
  out.replace_extension();
  out += suffix;
  return out;
}

void encode_frame(const ModelAssets& assets, const MotionParams& src,
                  const MotionParams& dri, const std::optional<Eigen::VectorXd>& dtheta,
                  const std::optional<Eigen::VectorXd>& dpsi, const Camera& cam,
                  const EncodingOptions& options, const fs::path& out,
                  const fs::path& depth_out, const fs::path& vis_out) {
  FlowEncoding enc;
  if (dtheta || dpsi) {
    const Eigen::VectorXd t = dtheta.value_or(Eigen::VectorXd::Zero(dri.theta.size()));
    const Eigen::VectorXd p = dpsi.value_or(Eigen::VectorXd::Zero(dri.psi.size()));
    enc = build_edited_encoding(assets, src, dri, t, p, cam, options);
  } else {
    enc = build_encoding(assets, src, dri, cam, options);
  }

  Tensor tensor = encoding_to_tensor(enc);
  if (!vis_out.empty()) {
    const FlowImage image = render_flow_image(enc, cam);
    tensor.meta["vis_max_flow_magnitude"] = image.max_magnitude;
    write_flow_ppm(vis_out, image);
  }
  write_tensor(out, tensor);

  if (!depth_out.empty()) {
    MotionParams target = assemble_target(
        src, (dtheta || dpsi)
                 ? apply_edit(dri,
                              dtheta.value_or(Eigen::VectorXd::Zero(dri.theta.size())),
                              dpsi.value_or(Eigen::VectorXd::Zero(dri.psi.size())))
                 : dri,
        options.root_policy);
    const DepthMap depth =
        render_depth(evaluate_mesh(assets, target), cam, options.workers);
    if (depth_out.extension() == ".ften") {
      write_tensor(depth_out, depth_to_tensor(depth));
    } else {
      const double far = cam.origin_depth() + options.sampling.d_far;
      write_depth_pgm(depth_out, depth, far > 0.0 ? far : 1.0);
    }
  }
}

int run_encode(const EncodeArgs& a) {
  if (a.dri_params.empty() == a.dri_manifest.empty())
    throw UsageError("pass exactly one of --dri-params or --dri-manifest");
  RunConfig config;
  if (!a.config.empty()) config = load_config(a.config);
  if (!a.mode.empty()) config.encoding.sampling.mode = parse_sampling_mode(a.mode);
  config.encoding.workers = resolve_workers(a.threads > 0 ? a.threads : config.threads);

  const ModelAssets assets = load_assets(a.assets);
  const MotionParams src = load_params(a.src_params);
  const Camera cam = load_camera(a.camera);
  const auto dtheta = parse_delta(a.delta_theta, "--delta-theta");
  const auto dpsi = parse_delta(a.delta_psi, "--delta-psi");

  if (!a.dri_params.empty()) {
    encode_frame(assets, src, load_params(a.dri_params), dtheta, dpsi, cam,
                 config.encoding, a.out, a.emit_depth, a.emit_vis);
    return 0;
  }

  const auto frames = read_manifest(a.dri_manifest);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const fs::path out = frame_path(a.out, i, ".ften");
    encode_frame(assets, src, load_params(frames[i]), dtheta, dpsi, cam,
                 config.encoding, out,
                 a.emit_depth.empty() ? fs::path() : frame_path(a.emit_depth, i, ".pgm"),
                 a.emit_vis.empty() ? fs::path() : frame_path(a.emit_vis, i, ".ppm"));
    written.push_back(out.filename());
  }
  write_manifest(a.out, written);
  return 0;
}

int run_inspect(const InspectArgs& a) {
  const Tensor t = read_tensor(a.path);
  nlohmann::json info = {{"dims", t.dims},
                         {"dtype", t.dtype() == DType::F32 ? "f32" : "i32"},
                         {"meta", t.meta}};
  std::cout << info.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-guided 3D flow encodings from parametric head motion"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-test-model", "Write a synthetic head model");
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--subdiv", gen.subdiv, "Icosphere subdivision level")
      ->capture_default_str();
  gen_cmd->add_option("--smoothing", gen.smoothing,
                      "Skin-weight smoothing passes (0 keeps binary weights)")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Asset container path")->required();
  gen_cmd->add_flag("--force", gen.force, "Overwrite an existing file");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval-mesh", "Evaluate the model to an OBJ mesh");
  eval_cmd->add_option("--assets", eval.assets)->required();
  eval_cmd->add_option("--params", eval.params)->required();
  eval_cmd->add_option("--out", eval.out)->required();

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "Build an H×W×3N flow encoding");
  enc_cmd->add_option("--assets", enc.assets)->required();
  enc_cmd->add_option("--src-params", enc.src_params)->required();
  enc_cmd->add_option("--dri-params", enc.dri_params);
  enc_cmd->add_option("--dri-manifest", enc.dri_manifest,
                      "Driving frames, one params path per line; --out then "
                      "names the output manifest");
  enc_cmd->add_option("--delta-theta", enc.delta_theta,
                      "Pose edit: comma-separated values or @file.json");
  enc_cmd->add_option("--delta-psi", enc.delta_psi,
                      "Expression edit: comma-separated values or @file.json");
  enc_cmd->add_option("--camera", enc.camera)->required();
  enc_cmd->add_option("--config", enc.config, "Sampling/policy config (JSON)");
  enc_cmd->add_option("--out", enc.out)->required();
  enc_cmd->add_option("--mode", enc.mode)
      ->check(CLI::IsMember({"depth_guided", "uniform"}));
  enc_cmd->add_option("--emit-depth", enc.emit_depth,
                      "Target depth map (.pgm, or .ften for float tensor)");
  enc_cmd->add_option("--emit-vis", enc.emit_vis, "Flow visualisation (.ppm)");
  enc_cmd->add_option("--threads", enc.threads,
                      "Worker threads (fallback: FLOWFIELD_THREADS)");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a tensor file header");
  inspect_cmd->add_option("path", inspect.path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::Usage);
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*eval_cmd) return run_eval(eval);
    if (*enc_cmd) return run_encode(enc);
    if (*inspect_cmd) return run_inspect(inspect);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error (validation): " << e.what() << "\n";
    return exit_code(ErrorKind::Validation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
