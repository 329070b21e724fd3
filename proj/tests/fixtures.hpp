#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "flowfield/camera.hpp"
#include "flowfield/headmodel.hpp"

namespace flowfield::testing {

/// Camera 0.6 m in front of the origin looking down -z, image y along
/// world -y; focal length scales with the image so the head fills ~60%.
Camera front_camera(int width, int height);

/// Rotation by `degrees` about the world y axis.
Mat3 yaw(double degrees);

/// Uniform point inside `box` scaled by `factor` about its centre.
Vec3 random_point_in(const Eigen::AlignedBox3d& box, double factor,
                     std::mt19937_64& rng);

double uniform(std::mt19937_64& rng, double lo, double hi);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Nearest ray hit against every triangle (Möller–Trumbore), as camera
/// depth; 0 when the ray misses. Independent of the rasterizer.
double raycast_depth(const TriMesh& mesh, const Camera& cam, int u, int v);

/// Closest point on a triangle through the plane projection and the three
/// edge segments; shares no code with the region classifier.
Vec3 closest_on_triangle_oracle(const Vec3& p, const Vec3& a, const Vec3& b,
                                const Vec3& c);

}  // namespace flowfield::testing
