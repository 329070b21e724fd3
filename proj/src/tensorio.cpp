#include "flowfield/tensorio.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "flowfield/error.hpp"

namespace flowfield {
namespace {

constexpr char kTensorMagic[4] = {'F', 'T', 'E', 'N'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw IoError(std::string("corrupt header: truncated while reading ") + what);
  }
  std::uint64_t uint(int width, const char* what) {
    need(width, what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += width;
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d)
      throw IoError("dims overflow: element count does not fit in 64 bits");
    n *= d;
  }
  return n;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::uint64_t parse_hex64(const nlohmann::json& j) {
  if (!j.is_string()) return 0;
  return std::stoull(j.get<std::string>(), nullptr, 16);
}

}  // namespace

std::size_t Tensor::size() const {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

const std::vector<float>& Tensor::f32() const {
  if (dtype() != DType::F32) throw ValidationError("tensor: expected f32 data");
  return std::get<std::vector<float>>(values);
}

const std::vector<std::int32_t>& Tensor::i32() const {
  if (dtype() != DType::I32) throw ValidationError("tensor: expected i32 data");
  return std::get<std::vector<std::int32_t>>(values);
}

Tensor Tensor::from_f32(std::vector<std::uint64_t> dims, std::vector<float> data) {
  Tensor t;
  t.dims = std::move(dims);
  t.values = std::move(data);
  return t;
}

Tensor Tensor::from_i32(std::vector<std::uint64_t> dims,
                        std::vector<std::int32_t> data) {
  Tensor t;
  t.dims = std::move(dims);
  t.values = std::move(data);
  return t;
}

std::string serialize_tensor(const Tensor& tensor,
                             const TensorWriteOptions& options) {
  if (tensor.dims.size() > std::numeric_limits<std::uint16_t>::max())
    throw ValidationError("tensor: rank too large");
  const std::uint64_t count = element_count(tensor.dims);
  if (count != tensor.size())
    throw ValidationError("tensor: data length does not match dims");
  if (!options.allow_nonfinite && tensor.dtype() == DType::F32) {
    for (float x : tensor.f32())
      if (!std::isfinite(x))
        throw NumericError("tensor: non-finite value (allow_nonfinite not set)");
  }
  const std::string meta = tensor.meta.is_null() ? "{}" : tensor.meta.dump();
  if (meta.size() > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("tensor: metadata too large");

  std::string out;
  out.reserve(16 + 8 * tensor.dims.size() + meta.size() + 4 * count);
  out.append(kTensorMagic, 4);
  put_u16(out, kTensorVersion);
  put_u16(out, static_cast<std::uint16_t>(tensor.dims.size()));
  for (std::uint64_t d : tensor.dims) put_u64(out, d);
  put_u16(out, static_cast<std::uint16_t>(tensor.dtype()));
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.append(meta);
  std::visit(
      [&](const auto& values) {
        for (auto x : values) put_u32(out, std::bit_cast<std::uint32_t>(x));
      },
      tensor.values);
  return out;
}

Tensor parse_tensor(std::string_view bytes) {
  Reader r(bytes);
  const std::string_view magic = r.take(4, "magic");
  if (magic != std::string_view(kTensorMagic, 4))
    throw IoError("bad magic: not a tensor file");
  const auto version = r.uint(2, "version");
  if (version != kTensorVersion)
    throw IoError("unsupported tensor format version " + std::to_string(version));
  const auto rank = r.uint(2, "rank");
  Tensor t;
  t.dims.resize(rank);
  for (auto& d : t.dims) d = r.uint(8, "dims");
  const std::uint64_t count = element_count(t.dims);
  const auto dtype = r.uint(2, "dtype");
  if (dtype != static_cast<std::uint16_t>(DType::F32) &&
      dtype != static_cast<std::uint16_t>(DType::I32))
    throw IoError("unsupported dtype code " + std::to_string(dtype));
  const auto meta_len = r.uint(4, "metadata length");
  const std::string_view meta = r.take(meta_len, "metadata");
  try {
    t.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt metadata: ") + e.what());
  }

  const std::uint64_t payload = count * 4;
  if (r.remaining() != payload) {
    std::ostringstream msg;
    msg << "corrupt payload: expected " << payload << " bytes, found "
        << r.remaining();
    throw IoError(msg.str());
  }
  const std::string_view body = r.take(payload, "payload");
  auto word = [&](std::size_t i) {
    std::uint32_t w = 0;
    for (int b = 0; b < 4; ++b)
      w |= static_cast<std::uint32_t>(static_cast<unsigned char>(body[4 * i + b]))
           << (8 * b);
    return w;
  };
  if (dtype == static_cast<std::uint16_t>(DType::F32)) {
    std::vector<float> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<float>(word(i));
    t.values = std::move(v);
  } else {
    std::vector<std::int32_t> v(count);
    for (std::size_t i = 0; i < count; ++i)
      v[i] = std::bit_cast<std::int32_t>(word(i));
    t.values = std::move(v);
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor,
                  const TensorWriteOptions& options) {
  write_file_atomic(path, serialize_tensor(tensor, options));
}

Tensor read_tensor(const std::filesystem::path& path) {
  return parse_tensor(read_file(path));
}

nlohmann::json metadata_to_json(const EncodingMetadata& meta) {
  const SamplingConfig& s = meta.sampling;
  nlohmann::json config = {{"N", s.samples},
                           {"delta", s.delta},
                           {"d_near", s.d_near},
                           {"d_far", s.d_far},
                           {"mode", to_string(s.mode)}};
  config["jitter_seed"] =
      s.jitter_seed ? nlohmann::json(*s.jitter_seed) : nlohmann::json(nullptr);
  return {{"kind", "flow_encoding"},
          {"layout", "HxWx3N, sample-major xyz per pixel, row-major"},
          {"units", "meters"},
          {"width", meta.width},
          {"height", meta.height},
          {"N", s.samples},
          {"config", config},
          {"sf_offset", meta.sf_offset},
          {"root_policy", to_string(meta.root_policy)},
          {"digests",
           {{"assets", hex64(meta.assets_digest)},
            {"src_params", hex64(meta.src_digest)},
            {"dri_params", hex64(meta.dri_digest)}}},
          {"clamped_samples", meta.clamped_samples},
          {"head_pixels", meta.head_pixels}};
}

Tensor encoding_to_tensor(const FlowEncoding& encoding) {
  const auto& m = encoding.meta;
  Tensor t = Tensor::from_f32({static_cast<std::uint64_t>(m.height),
                               static_cast<std::uint64_t>(m.width),
                               static_cast<std::uint64_t>(encoding.channels())},
                              encoding.data);
  t.meta = metadata_to_json(m);
  return t;
}

FlowEncoding encoding_from_tensor(const Tensor& tensor) {
  if (tensor.dims.size() != 3 || tensor.dims[2] % 3 != 0 || tensor.dims[2] == 0)
    throw ValidationError("flow encoding: expected an H×W×3N tensor");
  FlowEncoding enc;
  enc.data = tensor.f32();
  enc.meta.height = static_cast<int>(tensor.dims[0]);
  enc.meta.width = static_cast<int>(tensor.dims[1]);
  enc.meta.sampling.samples = static_cast<int>(tensor.dims[2] / 3);
  const auto& j = tensor.meta;
  try {
    if (j.contains("config")) {
      const auto& c = j["config"];
      enc.meta.sampling.delta = c.value("delta", enc.meta.sampling.delta);
      enc.meta.sampling.d_near = c.value("d_near", enc.meta.sampling.d_near);
      enc.meta.sampling.d_far = c.value("d_far", enc.meta.sampling.d_far);
      enc.meta.sampling.mode = parse_sampling_mode(c.value("mode", "depth_guided"));
      if (c.contains("jitter_seed") && !c["jitter_seed"].is_null())
        enc.meta.sampling.jitter_seed = c["jitter_seed"].get<std::uint64_t>();
    }
    enc.meta.sf_offset = j.value("sf_offset", true);
    enc.meta.root_policy = parse_root_policy(j.value("root_policy", "driving"));
    if (j.contains("digests")) {
      enc.meta.assets_digest = parse_hex64(j["digests"].value("assets", nlohmann::json()));
      enc.meta.src_digest = parse_hex64(j["digests"].value("src_params", nlohmann::json()));
      enc.meta.dri_digest = parse_hex64(j["digests"].value("dri_params", nlohmann::json()));
    }
    enc.meta.clamped_samples = j.value("clamped_samples", std::size_t{0});
    enc.meta.head_pixels = j.value("head_pixels", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("flow encoding metadata: ") + e.what());
  }
  return enc;
}

Tensor depth_to_tensor(const DepthMap& depth) {
  std::vector<float> data(depth.data().begin(), depth.data().end());
  Tensor t = Tensor::from_f32({static_cast<std::uint64_t>(depth.height()),
                               static_cast<std::uint64_t>(depth.width())},
                              std::move(data));
  t.meta = {{"kind", "depth_map"}, {"units", "meters"},
            {"empty_value", 0.0}};
  return t;
}

}  // namespace flowfield
