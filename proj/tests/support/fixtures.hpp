#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "ddhqa/mesh.hpp"
#include "ddhqa/regression.hpp"

namespace ddhqa::fixtures {

/// Axis-aligned unit cube, 8 vertices, 12 outward-wound triangles.
TriangleMesh unit_cube();

/// Regular tetrahedron with edge length 1.
TriangleMesh regular_tetrahedron();

/// Unit icosphere; level 0 is the icosahedron, each level splits every
/// triangle into four.
TriangleMesh icosphere(int level);

/// Hexagonal fan of 6 equilateral triangles with side `side` around vertex 0.
TriangleMesh hexagon_fan(double side);

/// Copy of `mesh` with each vertex displaced along a random direction by
/// `amplitude` times a standard-normal draw.
TriangleMesh perturbed(const TriangleMesh& mesh, double amplitude, std::uint64_t seed);

/// Rotation matrix (row-major) drawn from random Euler angles.
std::array<Vec3, 3> random_rotation(std::mt19937_64& rng);

TriangleMesh transformed(const TriangleMesh& mesh, const std::array<Vec3, 3>& rotation,
                         const Vec3& translation, double scale = 1.0);

TriangleMesh flipped(const TriangleMesh& mesh);

/// Videos with random geometry features and clip features, MOS linear in
/// gf[0]. Groups cycle through `n_groups` ids "g0".."g{n-1}".
std::vector<VideoSample> synthetic_videos(std::size_t n_videos, const FeatureDims& dims,
                                          std::size_t n_groups, std::uint64_t seed);

/// Writes the clip-feature, GF and MOS files for `videos` into `dir`.
void write_dataset_files(const std::filesystem::path& dir, const std::vector<VideoSample>& videos,
                         const FeatureDims& dims);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace ddhqa::fixtures
