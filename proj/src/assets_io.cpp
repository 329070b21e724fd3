#include <cmath>
#include <map>

#include "flowfield/error.hpp"
#include "flowfield/tensorio.hpp"

namespace flowfield {
namespace {

constexpr char kAssetMagic[8] = {'F', 'A', 'S', 'S', 'E', 'T', 'S', '1'};
constexpr int kAssetVersion = 1;

using Dims = std::vector<std::uint64_t>;

template <typename Derived>
Tensor real_tensor(const Eigen::DenseBase<Derived>& m, Dims dims) {
  std::vector<float> data;
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      data.push_back(static_cast<float>(m(r, c)));
  return Tensor::from_f32(std::move(dims), std::move(data));
}

RowMatrix to_matrix(const Tensor& t, Eigen::Index rows, Eigen::Index cols) {
  const auto& v = t.f32();
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = v[i];
  return m;
}

}  // namespace

std::string serialize_assets(const ModelAssets& assets) {
  assets.validate();
  const auto L = static_cast<std::uint64_t>(assets.num_vertices());
  const auto F = static_cast<std::uint64_t>(assets.num_faces());
  const auto J = static_cast<std::uint64_t>(assets.num_joints());

  std::vector<std::pair<std::string, Tensor>> arrays;
  arrays.emplace_back("template", real_tensor(assets.template_vertices, {L, 3}));
  {
    std::vector<std::int32_t> faces(assets.faces.data(),
                                    assets.faces.data() + assets.faces.size());
    arrays.emplace_back("faces", Tensor::from_i32({F, 3}, std::move(faces)));
  }
  arrays.emplace_back("shape_basis",
                      real_tensor(assets.shape_basis,
                                  {L, 3, static_cast<std::uint64_t>(assets.num_shape())}));
  arrays.emplace_back("expr_basis",
                      real_tensor(assets.expr_basis,
                                  {L, 3, static_cast<std::uint64_t>(assets.num_expr())}));
  arrays.emplace_back("joint_regressor", real_tensor(assets.joint_regressor, {J, L}));
  arrays.emplace_back("skin_weights", real_tensor(assets.skin_weights, {L, J}));
  if (assets.pose_corrective_basis)
    arrays.emplace_back("pose_corrective_basis",
                        real_tensor(*assets.pose_corrective_basis, {L, 3, 9 * J}));
  arrays.emplace_back(
      "parents", Tensor::from_i32({J}, std::vector<std::int32_t>(
                                           assets.joint_parents.begin(),
                                           assets.joint_parents.end())));

  std::string blobs;
  nlohmann::json entries = nlohmann::json::array();
  for (auto& [role, tensor] : arrays) {
    tensor.meta = {{"role", role}};
    const std::string bytes = serialize_tensor(tensor);
    entries.push_back({{"name", role},
                       {"role", role},
                       {"dims", tensor.dims},
                       {"dtype", tensor.dtype() == DType::F32 ? "f32" : "i32"},
                       {"offset", blobs.size()},
                       {"length", bytes.size()}});
    blobs += bytes;
  }
  const nlohmann::json manifest = {{"version", kAssetVersion},
                                   {"kind", "head_model_assets"},
                                   {"arrays", entries}};
  const std::string text = manifest.dump();

  std::string out(kAssetMagic, 8);
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
  out += text;
  out += blobs;
  return out;
}

ModelAssets parse_assets(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 8) != std::string_view(kAssetMagic, 8))
    throw IoError("bad magic: not an asset container");
  std::uint32_t manifest_len = 0;
  for (int i = 0; i < 4; ++i)
    manifest_len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i]))
                    << (8 * i);
  if (bytes.size() - 12 < manifest_len)
    throw IoError("corrupt header: asset manifest truncated");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(12, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt asset manifest: ") + e.what());
  }
  if (manifest.value("version", 0) != kAssetVersion)
    throw IoError("unsupported asset container version");
  const std::string_view blobs = bytes.substr(12 + manifest_len);

  std::map<std::string, Tensor> arrays;
  try {
    for (const auto& e : manifest.at("arrays")) {
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto length = e.at("length").get<std::uint64_t>();
      if (offset > blobs.size() || length > blobs.size() - offset)
        throw IoError("corrupt payload: asset array '" +
                      e.at("name").get<std::string>() + "' exceeds the file");
      Tensor t = parse_tensor(blobs.substr(offset, length));
      if (t.dims != e.at("dims").get<std::vector<std::uint64_t>>())
        throw ValidationError("assets: manifest dims of '" +
                              e.at("name").get<std::string>() +
                              "' do not match the embedded tensor");
      arrays.emplace(e.at("role").get<std::string>(), std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt asset manifest: ") + e.what());
  }

  auto get = [&](const std::string& role, std::size_t rank) -> const Tensor& {
    auto it = arrays.find(role);
    if (it == arrays.end()) throw ValidationError("assets: missing array '" + role + "'");
    if (it->second.dims.size() != rank)
      throw ValidationError("assets: array '" + role + "' has wrong rank");
    return it->second;
  };

  ModelAssets a;
  const Tensor& tmpl = get("template", 2);
  const auto L = static_cast<Eigen::Index>(tmpl.dims[0]);
  if (tmpl.dims[1] != 3) throw ValidationError("assets: template must be L×3");
  a.template_vertices = to_matrix(tmpl, L, 3);

  const Tensor& faces = get("faces", 2);
  if (faces.dims[1] != 3) throw ValidationError("assets: faces must be F×3");
  a.faces.resize(static_cast<Eigen::Index>(faces.dims[0]), 3);
  for (Eigen::Index i = 0; i < a.faces.size(); ++i) a.faces.data()[i] = faces.i32()[i];

  auto basis = [&](const std::string& role) {
    const Tensor& t = get(role, 3);
    if (static_cast<Eigen::Index>(t.dims[0]) != L || t.dims[1] != 3)
      throw ValidationError("assets: " + role + " must be L×3×K");
    return to_matrix(t, 3 * L, static_cast<Eigen::Index>(t.dims[2]));
  };
  a.shape_basis = basis("shape_basis");
  a.expr_basis = basis("expr_basis");

  const Tensor& parents = get("parents", 1);
  a.joint_parents.assign(parents.i32().begin(), parents.i32().end());
  const auto J = static_cast<Eigen::Index>(a.joint_parents.size());

  const Tensor& reg = get("joint_regressor", 2);
  if (static_cast<Eigen::Index>(reg.dims[0]) != J ||
      static_cast<Eigen::Index>(reg.dims[1]) != L)
    throw ValidationError("assets: joint_regressor must be J×L");
  a.joint_regressor = to_matrix(reg, J, L);

  const Tensor& skin = get("skin_weights", 2);
  if (static_cast<Eigen::Index>(skin.dims[0]) != L ||
      static_cast<Eigen::Index>(skin.dims[1]) != J)
    throw ValidationError("assets: skin_weights must be L×J");
  a.skin_weights = to_matrix(skin, L, J);
  // 32-bit storage perturbs row sums by up to ~1e-7; rows that are unit-sum
  // at that precision are renormalised, anything further off is rejected
  // by validate().
  for (Eigen::Index i = 0; i < L; ++i) {
    const double sum = a.skin_weights.row(i).sum();
    if (std::abs(sum - 1.0) <= 1e-6 && sum != 1.0) a.skin_weights.row(i) /= sum;
  }

  if (arrays.count("pose_corrective_basis")) {
    a.pose_corrective_basis = basis("pose_corrective_basis");
  }
  a.validate();
  return a;
}

void save_assets(const std::filesystem::path& path, const ModelAssets& assets) {
  write_file_atomic(path, serialize_assets(assets));
}

ModelAssets load_assets(const std::filesystem::path& path) {
  return parse_assets(read_file(path));
}

}  // namespace flowfield
