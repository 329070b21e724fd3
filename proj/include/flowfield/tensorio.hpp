#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flowfield/camera.hpp"
#include "flowfield/encoding.hpp"
#include "flowfield/headmodel.hpp"

namespace flowfield {

// TensorFile layout, all integers little-endian:
//
//   offset  size      field
//   0       4         magic "FTEN"
//   4       2         format version (u16, currently 1)
//   6       2         rank (u16)
//   8       8*rank    dims (u64 each)
//   ..      2         dtype code (u16): 1 = f32, 2 = i32
//   ..      4         metadata length in bytes (u32)
//   ..      len       metadata, UTF-8 JSON object
//   ..      4*prod    row-major payload

inline constexpr std::uint16_t kTensorVersion = 1;

enum class DType : std::uint16_t { F32 = 1, I32 = 2 };

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::variant<std::vector<float>, std::vector<std::int32_t>> values;
  nlohmann::json meta = nlohmann::json::object();

  DType dtype() const {
    return std::holds_alternative<std::vector<float>>(values) ? DType::F32
                                                              : DType::I32;
  }
  std::size_t size() const;
  const std::vector<float>& f32() const;
  const std::vector<std::int32_t>& i32() const;

  static Tensor from_f32(std::vector<std::uint64_t> dims,
                         std::vector<float> data);
  static Tensor from_i32(std::vector<std::uint64_t> dims,
                         std::vector<std::int32_t> data);
};

struct TensorWriteOptions {
  bool allow_nonfinite = false;
};

std::string serialize_tensor(const Tensor& tensor,
                             const TensorWriteOptions& options = {});
/// Parses exactly one tensor occupying all of `bytes`.
Tensor parse_tensor(std::string_view bytes);

/// Writes through a temporary sibling file that is renamed into place.
void write_tensor(const std::filesystem::path& path, const Tensor& tensor,
                  const TensorWriteOptions& options = {});
Tensor read_tensor(const std::filesystem::path& path);

// Asset container layout:
//
//   0   8     magic "FASSETS1"
//   8   4     manifest length (u32 LE)
//   12  len   manifest JSON: {"version":1, "arrays":[{"name","role",
//             "dims","dtype","offset","length"}, ...]}
//   ..        concatenated TensorFiles; offsets are relative to the first
//             byte after the manifest

std::string serialize_assets(const ModelAssets& assets);
ModelAssets parse_assets(std::string_view bytes);
void save_assets(const std::filesystem::path& path, const ModelAssets& assets);
ModelAssets load_assets(const std::filesystem::path& path);

Tensor encoding_to_tensor(const FlowEncoding& encoding);
FlowEncoding encoding_from_tensor(const Tensor& tensor);
nlohmann::json metadata_to_json(const EncodingMetadata& meta);

Tensor depth_to_tensor(const DepthMap& depth);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace flowfield
