#include "ddhqa/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include "ddhqa/error.hpp"

namespace ddhqa {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

FaceGeometry triangle_geometry(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                               double degenerate_threshold) {
  const Vec3 n = cross(p1 - p0, p2 - p0);
  const double len = norm(n);
  FaceGeometry g;
  g.area = 0.5 * len;
  if (!(g.area >= degenerate_threshold) || len == 0.0) {
    g.degenerate = true;
    return g;
  }
  g.normal = (1.0 / len) * n;
  return g;
}

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  if (faces_.empty()) throw Error(ErrorKind::EmptyMesh, "mesh has no faces");
  if (vertices_.size() < 3) {
    throw Error(ErrorKind::InvalidMesh, "mesh needs at least 3 vertices");
  }
  const auto n_vertices = vertices_.size();
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    for (auto v : faces_[f]) {
      if (v >= n_vertices) {
        throw Error(ErrorKind::InvalidMesh, "face " + std::to_string(f) +
                                                " references vertex " + std::to_string(v) +
                                                " of " + std::to_string(n_vertices));
      }
    }
  }

  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = -1.0 * lo;
  for (const auto& p : vertices_) {
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  bbox_diagonal_ = norm(hi - lo);

  vertex_faces_.resize(n_vertices);
  std::unordered_map<std::uint64_t, std::uint32_t> edge_index;
  edge_index.reserve(faces_.size() * 2);
  for (std::uint32_t f = 0; f < faces_.size(); ++f) {
    const Face& face = faces_[f];
    for (int k = 0; k < 3; ++k) {
      const auto v = face[k];
      auto& vf = vertex_faces_[v];
      if (vf.empty() || vf.back() != f) vf.push_back(f);

      std::uint32_t a = face[k];
      std::uint32_t b = face[(k + 1) % 3];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
      auto [it, inserted] = edge_index.try_emplace(key, static_cast<std::uint32_t>(edges_.size()));
      if (inserted) {
        edges_.push_back({a, b});
        edge_faces_.emplace_back();
      }
      auto& ef = edge_faces_[it->second];
      if (ef.empty() || ef.back() != f) ef.push_back(f);
    }
  }

  const double threshold = degenerate_area_threshold();
  face_geometry_.reserve(faces_.size());
  for (const Face& face : faces_) {
    face_geometry_.push_back(triangle_geometry(vertices_[face[0]], vertices_[face[1]],
                                               vertices_[face[2]], threshold));
  }
}

double TriangleMesh::degenerate_area_threshold() const {
  return kDegenerateAreaFactor * bbox_diagonal_ * bbox_diagonal_;
}

FaceGeometry face_geometry(const TriangleMesh& mesh, std::size_t face) {
  if (face >= mesh.face_count()) {
    throw Error(ErrorKind::InvalidArgument, "face index " + std::to_string(face) + " out of range");
  }
  return mesh.face_geometry(face);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void fan_triangulate(const std::vector<std::uint32_t>& polygon, std::vector<Face>& faces) {
  for (std::size_t k = 1; k + 1 < polygon.size(); ++k) {
    faces.push_back({polygon[0], polygon[k], polygon[k + 1]});
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

void write_double(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

TriangleMesh parse_obj(std::istream& in) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::uint32_t> polygon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) parse_fail(line_no, "vertex record needs 3 coordinates");
      Vec3 p{};
      for (int k = 0; k < 3; ++k) {
        auto v = to_double(tokens[k + 1]);
        if (!v) parse_fail(line_no, "bad coordinate '" + std::string(tokens[k + 1]) + "'");
        p[k] = *v;
      }
      vertices.push_back(p);
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) parse_fail(line_no, "face record needs at least 3 vertices");
      polygon.clear();
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const auto ref = tokens[k].substr(0, tokens[k].find('/'));
        auto idx = to_integer(ref);
        if (!idx) parse_fail(line_no, "bad face index '" + std::string(tokens[k]) + "'");
        long long resolved = *idx;
        if (resolved == 0) parse_fail(line_no, "face index 0 (OBJ indices are 1-based)");
        if (resolved < 0) resolved += static_cast<long long>(vertices.size()) + 1;
        if (resolved < 1 || resolved > static_cast<long long>(vertices.size())) {
          parse_fail(line_no, "face index " + std::to_string(*idx) + " out of range");
        }
        polygon.push_back(static_cast<std::uint32_t>(resolved - 1));
      }
      fan_triangulate(polygon, faces);
    }
    // vt, vn, usemtl, mtllib, o, g, s, l: geometry only.
  }
  if (in.bad()) throw Error(ErrorKind::Io, "read error");
  if (faces.empty()) throw Error(ErrorKind::EmptyMesh, "OBJ file has no faces");
  return TriangleMesh(std::move(vertices), std::move(faces));
}

namespace {

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

}  // namespace

TriangleMesh parse_ply_ascii(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };

  if (!next_line() || split_ws(line) != std::vector<std::string_view>{"ply"}) {
    parse_fail(line_no, "missing 'ply' magic");
  }
  std::vector<PlyElement> elements;
  bool ascii = false;
  for (;;) {
    if (!next_line()) parse_fail(line_no, "unterminated PLY header");
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2) parse_fail(line_no, "bad format line");
      if (tokens[1] != "ascii") parse_fail(line_no, "only ASCII PLY is supported");
      ascii = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) parse_fail(line_no, "bad element line");
      auto count = to_integer(tokens[2]);
      if (!count || *count < 0) parse_fail(line_no, "bad element count");
      elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(*count), {}});
    } else if (tokens[0] == "property") {
      if (elements.empty()) parse_fail(line_no, "property before element");
      if (tokens.size() >= 5 && tokens[1] == "list") {
        elements.back().properties.push_back({std::string(tokens[4]), true});
      } else if (tokens.size() == 3) {
        elements.back().properties.push_back({std::string(tokens[2]), false});
      } else {
        parse_fail(line_no, "bad property line");
      }
    } else {
      parse_fail(line_no, "unknown header keyword '" + std::string(tokens[0]) + "'");
    }
  }
  if (!ascii) parse_fail(line_no, "missing format line");

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::uint32_t> polygon;
  for (const auto& element : elements) {
    int xyz[3] = {-1, -1, -1};
    int face_list = -1;
    for (std::size_t p = 0; p < element.properties.size(); ++p) {
      const auto& prop = element.properties[p];
      if (element.name == "vertex" && !prop.is_list) {
        if (prop.name == "x") xyz[0] = static_cast<int>(p);
        if (prop.name == "y") xyz[1] = static_cast<int>(p);
        if (prop.name == "z") xyz[2] = static_cast<int>(p);
      }
      if (element.name == "face" && prop.is_list &&
          (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
        face_list = static_cast<int>(p);
      }
    }
    if (element.name == "vertex" && (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)) {
      parse_fail(line_no, "vertex element lacks x/y/z properties");
    }
    if (element.name == "face" && face_list < 0) {
      parse_fail(line_no, "face element lacks a vertex_indices list");
    }

    for (std::size_t r = 0; r < element.count; ++r) {
      if (!next_line()) parse_fail(line_no, "unexpected end of file in '" + element.name + "'");
      const auto tokens = split_ws(line);
      std::size_t cursor = 0;
      Vec3 p{};
      for (std::size_t prop = 0; prop < element.properties.size(); ++prop) {
        if (element.properties[prop].is_list) {
          if (cursor >= tokens.size()) parse_fail(line_no, "truncated record");
          auto n = to_integer(tokens[cursor++]);
          if (!n || *n < 0) parse_fail(line_no, "bad list length");
          if (cursor + static_cast<std::size_t>(*n) > tokens.size()) {
            parse_fail(line_no, "truncated list");
          }
          if (static_cast<int>(prop) == face_list) {
            if (*n < 3) parse_fail(line_no, "face with fewer than 3 vertices");
            polygon.clear();
            for (long long k = 0; k < *n; ++k) {
              auto idx = to_integer(tokens[cursor + static_cast<std::size_t>(k)]);
              if (!idx || *idx < 0) parse_fail(line_no, "bad vertex index");
              polygon.push_back(static_cast<std::uint32_t>(*idx));
            }
            fan_triangulate(polygon, faces);
          }
          cursor += static_cast<std::size_t>(*n);
        } else {
          if (cursor >= tokens.size()) parse_fail(line_no, "truncated record");
          auto v = to_double(tokens[cursor]);
          if (!v) parse_fail(line_no, "bad number '" + std::string(tokens[cursor]) + "'");
          for (int k = 0; k < 3; ++k) {
            if (static_cast<int>(prop) == xyz[k]) p[k] = *v;
          }
          ++cursor;
        }
      }
      if (cursor != tokens.size()) parse_fail(line_no, "extra values in record");
      if (element.name == "vertex") vertices.push_back(p);
    }
  }
  if (faces.empty()) throw Error(ErrorKind::EmptyMesh, "PLY file has no faces");
  for (const auto& f : faces) {
    for (auto v : f) {
      if (v >= vertices.size()) {
        throw Error(ErrorKind::Parse, "face references vertex " + std::to_string(v) +
                                          " but only " + std::to_string(vertices.size()) +
                                          " vertices exist");
      }
    }
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".ply") return MeshFormat::PlyAscii;
  throw Error(ErrorKind::InvalidArgument, "unsupported mesh extension '" + ext + "'");
}

TriangleMesh parse_mesh(const std::filesystem::path& path, MeshFormat format) {
  auto in = open_input(path);
  try {
    return format == MeshFormat::Obj ? parse_obj(in) : parse_ply_ascii(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

TriangleMesh parse_mesh(const std::filesystem::path& path) {
  return parse_mesh(path, format_from_path(path));
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  for (const auto& p : mesh.vertices()) {
    out << 'v';
    for (double c : p) {
      out << ' ';
      write_double(out, c);
    }
    out << '\n';
  }
  for (const auto& f : mesh.faces()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

void write_ply_ascii(std::ostream& out, const TriangleMesh& mesh) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertex_count() << '\n'
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.face_count() << '\n'
      << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& p : mesh.vertices()) {
    write_double(out, p[0]);
    out << ' ';
    write_double(out, p[1]);
    out << ' ';
    write_double(out, p[2]);
    out << '\n';
  }
  for (const auto& f : mesh.faces()) {
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
}

}  // namespace ddhqa
