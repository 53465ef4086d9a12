#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace ddhqa {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a);

using Face = std::array<std::uint32_t, 3>;

/// Unordered vertex pair, stored with `a < b`.
struct Edge {
  std::uint32_t a;
  std::uint32_t b;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct FaceGeometry {
  Vec3 normal{0.0, 0.0, 0.0};
  double area = 0.0;
  bool degenerate = false;
};

/// Indexed triangle mesh with edge/vertex adjacency. Immutable once built.
///
/// Faces are stored in the winding order they were given. Degenerate faces
/// (area below a threshold relative to the bounding-box diagonal) stay in
/// the face list but are reported through `face_geometry()`.
class TriangleMesh {
 public:
  /// Throws Error{EmptyMesh} when `faces` is empty, Error{InvalidMesh} on an
  /// out-of-range or repeated index within a face, or fewer than 3 vertices.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  std::span<const Vec3> vertices() const { return vertices_; }
  std::span<const Face> faces() const { return faces_; }
  std::span<const Edge> edges() const { return edges_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::span<const std::uint32_t> edge_faces(std::size_t edge) const { return edge_faces_[edge]; }
  std::span<const std::uint32_t> vertex_faces(std::size_t vertex) const {
    return vertex_faces_[vertex];
  }

  /// Cached per-face normal/area/degeneracy.
  const FaceGeometry& face_geometry(std::size_t face) const { return face_geometry_.at(face); }

  double bbox_diagonal() const { return bbox_diagonal_; }
  double degenerate_area_threshold() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> edge_faces_;
  std::vector<std::vector<std::uint32_t>> vertex_faces_;
  std::vector<FaceGeometry> face_geometry_;
  double bbox_diagonal_ = 0.0;
};

/// Relative threshold factor applied to the squared bounding-box diagonal.
inline constexpr double kDegenerateAreaFactor = 1e-12;

/// Normal and area of triangle (p0, p1, p2) in the given winding order.
/// `degenerate_threshold` is an absolute area.
FaceGeometry triangle_geometry(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                               double degenerate_threshold);

FaceGeometry face_geometry(const TriangleMesh& mesh, std::size_t face);

enum class MeshFormat { Obj, PlyAscii };

/// Picks the format from the file extension (`.obj`, `.ply`).
MeshFormat format_from_path(const std::filesystem::path& path);

TriangleMesh parse_mesh(const std::filesystem::path& path, MeshFormat format);
TriangleMesh parse_mesh(const std::filesystem::path& path);
TriangleMesh parse_obj(std::istream& in);
TriangleMesh parse_ply_ascii(std::istream& in);

/// Writes `v`/`f` records with shortest round-trip decimal coordinates.
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void write_ply_ascii(std::ostream& out, const TriangleMesh& mesh);

}  // namespace ddhqa
