#include "flowfield/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "flowfield/error.hpp"
#include "flowfield/tensorio.hpp"

namespace flowfield {

std::string format_obj(const TriMesh& mesh) {
  std::string out;
  out.reserve(static_cast<std::size_t>(mesh.num_vertices()) * 48 +
              static_cast<std::size_t>(mesh.num_faces()) * 24);
  char line[128];
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3 v = mesh.vertex(i);
    std::snprintf(line, sizeof line, "v %.9f %.9f %.9f\n", v.x(), v.y(), v.z());
    out += line;
  }
  for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
    std::snprintf(line, sizeof line, "f %d %d %d\n", mesh.faces()(f, 0) + 1,
                  mesh.faces()(f, 1) + 1, mesh.faces()(f, 2) + 1);
    out += line;
  }
  return out;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  write_file_atomic(path, format_obj(mesh));
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": malformed vertex record");
      verts.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int& idx : f) {
        std::string tok;
        if (!(ls >> tok))
          throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                ": face needs three vertices");
        idx = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      faces.push_back(f);
    }
  }
  VertexArray v(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i)
    v.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
  FaceArray f(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    for (int c = 0; c < 3; ++c) f(static_cast<Eigen::Index>(i), c) = faces[i][c];
  return TriMesh(std::move(v), std::move(f));
}

std::string format_depth_pgm(const DepthMap& depth, double max_depth) {
  if (!(max_depth > 0.0)) throw ValidationError("depth pgm: max depth must be positive");
  std::ostringstream header;
  header.precision(9);
  header << "P5\n# depth_m = sample / 65535 * " << max_depth
         << " ; 0 = no head surface\n"
         << depth.width() << " " << depth.height() << "\n65535\n";
  std::string out = header.str();
  for (double d : depth.data()) {
    const double scaled = std::clamp(d / max_depth, 0.0, 1.0) * 65535.0;
    const auto s = static_cast<unsigned>(std::lround(scaled));
    out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  return out;
}

void write_depth_pgm(const std::filesystem::path& path, const DepthMap& depth,
                     double max_depth) {
  write_file_atomic(path, format_depth_pgm(depth, max_depth));
}

FlowImage render_flow_image(const FlowEncoding& encoding, const Camera& cam) {
  const auto& m = encoding.meta;
  FlowImage img;
  img.width = m.width;
  img.height = m.height;
  img.rgb.assign(static_cast<std::size_t>(m.width) * m.height * 3, 0);
  const int mid = m.sampling.samples / 2;
  const Mat3 to_cam = cam.camera_to_world.rotation.transpose();

  std::vector<Vec3> flows(static_cast<std::size_t>(m.width) * m.height);
  for (int v = 0; v < m.height; ++v)
    for (int u = 0; u < m.width; ++u) {
      const Vec3 f = to_cam * encoding.flow(u, v, mid);
      flows[static_cast<std::size_t>(v) * m.width + u] = f;
      img.max_magnitude = std::max(img.max_magnitude, f.norm());
    }
  // Residuals at the zero-flow tolerance are float noise, not motion.
  if (img.max_magnitude <= kVisFlowFloor) return img;

  for (std::size_t i = 0; i < flows.size(); ++i) {
    const Vec3& f = flows[i];
    if (f.norm() <= kVisFlowFloor) continue;
    const double value = f.norm() / img.max_magnitude;
    double hue = std::atan2(f.y(), f.x()) / (2.0 * M_PI);
    if (hue < 0.0) hue += 1.0;
    // HSV with full saturation.
    const double h6 = hue * 6.0;
    const int sector = static_cast<int>(h6) % 6;
    const double frac = h6 - std::floor(h6);
    const double q = value * (1.0 - frac);
    const double t = value * frac;
    double rgb[3];
    switch (sector) {
      case 0: rgb[0] = value; rgb[1] = t; rgb[2] = 0; break;
      case 1: rgb[0] = q; rgb[1] = value; rgb[2] = 0; break;
      case 2: rgb[0] = 0; rgb[1] = value; rgb[2] = t; break;
      case 3: rgb[0] = 0; rgb[1] = q; rgb[2] = value; break;
      case 4: rgb[0] = t; rgb[1] = 0; rgb[2] = value; break;
      default: rgb[0] = value; rgb[1] = 0; rgb[2] = q; break;
    }
    for (int c = 0; c < 3; ++c)
      img.rgb[3 * i + c] =
          static_cast<unsigned char>(std::lround(std::clamp(rgb[c], 0.0, 1.0) * 255.0));
  }
  return img;
}

std::string format_ppm(const FlowImage& image) {
  std::ostringstream header;
  header.precision(9);
  header << "P6\n# max_flow_magnitude_m = " << image.max_magnitude << "\n"
         << image.width << " " << image.height << "\n255\n";
  std::string out = header.str();
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

void write_flow_ppm(const std::filesystem::path& path, const FlowImage& image) {
  write_file_atomic(path, format_ppm(image));
}

}  // namespace flowfield
