#include "fixtures.hpp"

#include <cmath>
#include <numbers>
#include <fstream>
#include <map>

#include "ddhqa/io.hpp"

namespace ddhqa::fixtures {

TriangleMesh unit_cube() {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.push_back({static_cast<double>(i & 1), static_cast<double>((i >> 1) & 1),
                 static_cast<double>((i >> 2) & 1)});
  }
  std::vector<Face> f = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                         {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh regular_tetrahedron() {
  const double s = 1.0 / (2.0 * std::sqrt(2.0));
  std::vector<Vec3> v = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  std::vector<Face> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p = (1.0 / norm(p)) * p;
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      Vec3 m = 0.5 * (v[a] + v[b]);
      m = (1.0 / norm(m)) * m;
      v.push_back(m);
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    for (const auto& face : f) {
      const auto ab = mid(face[0], face[1]);
      const auto bc = mid(face[1], face[2]);
      const auto ca = mid(face[2], face[0]);
      next.push_back({face[0], ab, ca});
      next.push_back({face[1], bc, ab});
      next.push_back({face[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh hexagon_fan(double side) {
  std::vector<Vec3> v = {{0, 0, 0}};
  for (int k = 0; k < 6; ++k) {
    const double a = k * std::numbers::pi / 3.0;
    v.push_back({side * std::cos(a), side * std::sin(a), 0.0});
  }
  std::vector<Face> f;
  for (std::uint32_t k = 0; k < 6; ++k) f.push_back({0, 1 + k, 1 + (k + 1) % 6});
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh perturbed(const TriangleMesh& mesh, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> v(mesh.vertices().begin(), mesh.vertices().end());
  for (auto& p : v) {
    Vec3 dir{normal(rng), normal(rng), normal(rng)};
    dir = (1.0 / norm(dir)) * dir;
    p = p + (amplitude * normal(rng)) * dir;
  }
  return TriangleMesh(std::move(v), {mesh.faces().begin(), mesh.faces().end()});
}

std::array<Vec3, 3> random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  const double a = angle(rng), b = angle(rng), c = angle(rng);
  const std::array<Vec3, 3> rz{{{std::cos(a), -std::sin(a), 0}, {std::sin(a), std::cos(a), 0}, {0, 0, 1}}};
  const std::array<Vec3, 3> ry{{{std::cos(b), 0, std::sin(b)}, {0, 1, 0}, {-std::sin(b), 0, std::cos(b)}}};
  const std::array<Vec3, 3> rx{{{1, 0, 0}, {0, std::cos(c), -std::sin(c)}, {0, std::sin(c), std::cos(c)}}};
  auto mul = [](const std::array<Vec3, 3>& p, const std::array<Vec3, 3>& q) {
    std::array<Vec3, 3> r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r[i][j] += p[i][k] * q[k][j];
    return r;
  };
  return mul(rz, mul(ry, rx));
}

TriangleMesh transformed(const TriangleMesh& mesh, const std::array<Vec3, 3>& rotation,
                         const Vec3& translation, double scale) {
  std::vector<Vec3> v;
  for (const auto& p : mesh.vertices()) {
    const Vec3 r{dot(rotation[0], p), dot(rotation[1], p), dot(rotation[2], p)};
    v.push_back(scale * r + translation);
  }
  return TriangleMesh(std::move(v), {mesh.faces().begin(), mesh.faces().end()});
}

TriangleMesh flipped(const TriangleMesh& mesh) {
  std::vector<Face> f;
  for (const auto& face : mesh.faces()) f.push_back({face[0], face[2], face[1]});
  return TriangleMesh({mesh.vertices().begin(), mesh.vertices().end()}, std::move(f));
}

std::vector<VideoSample> synthetic_videos(std::size_t n_videos, const FeatureDims& dims,
                                          std::size_t n_groups, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> clip_count(2, 8);
  std::vector<VideoSample> out;
  for (std::size_t i = 0; i < n_videos; ++i) {
    VideoSample v;
    v.video_id = "video" + std::to_string(1000 + i);
    v.group_id = "g" + std::to_string(i % n_groups);
    for (double& g : v.gf) g = normal(rng);
    v.mos = 3.0 + v.gf[0];
    const std::size_t n_clips = clip_count(rng);
    for (std::size_t c = 0; c < n_clips; ++c) {
      ClipFeatureRecord clip{v.video_id, c, std::vector<double>(dims.spatial),
                             std::vector<double>(dims.temporal)};
      for (double& x : clip.sf) x = normal(rng);
      for (double& x : clip.tf) x = normal(rng);
      v.clips.push_back(std::move(clip));
    }
    out.push_back(std::move(v));
  }
  return out;
}

void write_dataset_files(const std::filesystem::path& dir, const std::vector<VideoSample>& videos,
                         const FeatureDims& dims) {
  std::filesystem::create_directories(dir);
  ClipFeatureFile clips{dims, {}};
  for (const auto& v : videos) clips.records.insert(clips.records.end(), v.clips.begin(), v.clips.end());
  std::ofstream clip_out(dir / "clips.jsonl");
  write_clip_features(clip_out, clips);
  std::ofstream gf_out(dir / "gf.jsonl");
  for (const auto& v : videos) gf_out << gf_record_line({v.video_id, v.gf}) << '\n';
  std::ofstream mos_out(dir / "mos.csv");
  mos_out.precision(17);
  mos_out << "video_id,mos,group_id\n";
  for (const auto& v : videos) mos_out << v.video_id << ',' << v.mos << ',' << v.group_id << '\n';
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ddhqa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ddhqa::fixtures
