#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "ddhqa/error.hpp"
#include "ddhqa/mesh.hpp"
#include "support/fixtures.hpp"

using namespace ddhqa;

namespace {

TriangleMesh obj_from(const std::string& text) {
  std::istringstream in(text);
  return parse_obj(in);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected ddhqa::Error";
  return ErrorKind::InvalidArgument;
}

const char* kCubeObj = R"(# triangulated unit cube
v 0 0 0
v 1 0 0
v 0 1 0
v 1 1 0
v 0 0 1
v 1 0 1
v 0 1 1
v 1 1 1
vt 0 0
vn 0 0 1
f 1 3 4
f 1 4 2
f 5 6 8
f 5 8 7
f 1/1 2/1 6/1
f 1/1/1 6/1/1 5/1/1
f 3//1 7//1 8//1
f 3 8 4
f 1 5 7
f 1 7 3
f 2 4 8
f 2 8 6
)";

}  // namespace

TEST(ParseObj, TriangulatedCubeCounts) {
  const auto mesh = obj_from(kCubeObj);
  EXPECT_EQ(mesh.vertex_count(), 8u);
  EXPECT_EQ(mesh.face_count(), 12u);
  EXPECT_EQ(mesh.edge_count(), 18u);
}

TEST(ParseObj, QuadIsFanTriangulated) {
  const auto mesh = obj_from("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  ASSERT_EQ(mesh.face_count(), 2u);
  EXPECT_EQ(mesh.faces()[0], (Face{0, 1, 2}));
  EXPECT_EQ(mesh.faces()[1], (Face{0, 2, 3}));
}

TEST(ParseObj, PentagonGivesThreeTriangles) {
  const auto mesh = obj_from("v 0 0 0\nv 1 0 0\nv 2 1 0\nv 1 2 0\nv 0 1 0\nf 1 2 3 4 5\n");
  EXPECT_EQ(mesh.face_count(), 3u);
}

TEST(ParseObj, ZeroIndexIsParseErrorWithLine) {
  try {
    obj_from("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(ParseObj, NegativeIndicesAreRelative) {
  const auto mesh = obj_from("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  EXPECT_EQ(mesh.faces()[0], (Face{0, 1, 2}));
}

TEST(ParseObj, Errors) {
  EXPECT_EQ(kind_of([] { obj_from("v 0 0 0\nv 1 0 0\nv 0 1 0\n"); }), ErrorKind::EmptyMesh);
  EXPECT_EQ(kind_of([] { obj_from("v 0 0\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { obj_from("v 0 0 x\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { obj_from("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { obj_from("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_mesh("/nonexistent/mesh.obj"); }), ErrorKind::Io);
}

TEST(ParseObj, DuplicateFacesArePreserved) {
  const auto mesh = obj_from("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 3\n");
  EXPECT_EQ(mesh.face_count(), 2u);
  EXPECT_EQ(mesh.edge_faces(0).size(), 2u);
}

TEST(ParseObj, CoordinatesReadExactly) {
  const auto mesh = obj_from("v 0.1 -2.5e-3 1e300\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  EXPECT_EQ(mesh.vertices()[0][0], 0.1);
  EXPECT_EQ(mesh.vertices()[0][1], -2.5e-3);
  EXPECT_EQ(mesh.vertices()[0][2], 1e300);
}

TEST(ParsePly, AsciiWithExtraPropertiesAndQuads) {
  std::istringstream in(R"(ply
format ascii 1.0
comment made by hand
element vertex 4
property float x
property float y
property float z
property uchar red
element face 1
property list uchar int vertex_indices
property int flags
end_header
0 0 0 255
1 0 0 255
1 1 0 255
0 1 0 255
4 0 1 2 3 7
)");
  const auto mesh = parse_ply_ascii(in);
  EXPECT_EQ(mesh.vertex_count(), 4u);
  EXPECT_EQ(mesh.face_count(), 2u);
  EXPECT_EQ(mesh.edge_count(), 5u);
}

TEST(ParsePly, RejectsBinaryAndTruncated) {
  std::istringstream binary("ply\nformat binary_little_endian 1.0\nend_header\n");
  EXPECT_EQ(kind_of([&] { parse_ply_ascii(binary); }), ErrorKind::Parse);
  std::istringstream truncated(
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
      "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
      "0 0 0\n1 0 0\n");
  EXPECT_EQ(kind_of([&] { parse_ply_ascii(truncated); }), ErrorKind::Parse);
}

TEST(FaceGeometry, RightTriangle) {
  const TriangleMesh mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  const auto g = face_geometry(mesh, 0);
  EXPECT_FALSE(g.degenerate);
  EXPECT_DOUBLE_EQ(g.area, 0.5);
  EXPECT_DOUBLE_EQ(g.normal[0], 0.0);
  EXPECT_DOUBLE_EQ(g.normal[1], 0.0);
  EXPECT_DOUBLE_EQ(g.normal[2], 1.0);
}

TEST(FaceGeometry, ScaledTriangleArea) {
  const TriangleMesh mesh({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}}, {{0, 1, 2}});
  EXPECT_DOUBLE_EQ(face_geometry(mesh, 0).area, 2.0);
}

TEST(FaceGeometry, CoincidentVerticesAreDegenerate) {
  const TriangleMesh mesh({{0, 0, 0}, {0, 0, 0}, {0, 1, 0}, {1, 1, 1}}, {{0, 1, 2}, {1, 2, 3}});
  EXPECT_TRUE(face_geometry(mesh, 0).degenerate);
  EXPECT_FALSE(face_geometry(mesh, 1).degenerate);
}

TEST(FaceGeometry, ThresholdIsRelativeToBoundingBox) {
  // A sliver whose area is tiny in absolute terms but large relative to its
  // own bounding box stays valid at every scale.
  for (double s : {1e-6, 1.0, 1e6}) {
    const TriangleMesh mesh({{0, 0, 0}, {s, 0, 0}, {0, s * 1e-4, 0}}, {{0, 1, 2}});
    EXPECT_FALSE(face_geometry(mesh, 0).degenerate) << s;
  }
  const TriangleMesh sliver({{0, 0, 0}, {1, 0, 0}, {0.5, 1e-13, 0}}, {{0, 1, 2}});
  EXPECT_TRUE(face_geometry(sliver, 0).degenerate);
}

TEST(FaceGeometry, NormalsAreUnitLength) {
  const auto mesh = fixtures::perturbed(fixtures::icosphere(2), 0.05, 3);
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    EXPECT_NEAR(norm(mesh.face_geometry(f).normal), 1.0, 1e-9);
  }
}

TEST(TriangleMesh, RejectsBadIndicesAndEmptyFaces) {
  EXPECT_EQ(kind_of([] { TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {}); }),
            ErrorKind::EmptyMesh);
  EXPECT_EQ(kind_of([] { TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 3}}); }),
            ErrorKind::InvalidMesh);
}

TEST(TriangleMesh, EulerCharacteristicOfClosedGenusZeroMeshes) {
  for (const auto& mesh : {fixtures::unit_cube(), fixtures::regular_tetrahedron(),
                           fixtures::icosphere(0), fixtures::icosphere(1), fixtures::icosphere(3)}) {
    const auto chi = static_cast<long>(mesh.vertex_count()) - static_cast<long>(mesh.edge_count()) +
                     static_cast<long>(mesh.face_count());
    EXPECT_EQ(chi, 2);
  }
}

TEST(TriangleMesh, AdjacencySymmetry) {
  const auto mesh = fixtures::icosphere(2);
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const auto edge = mesh.edges()[e];
    EXPECT_LT(edge.a, edge.b);
    const auto listed = mesh.edge_faces(e);
    const std::set<std::uint32_t> listed_set(listed.begin(), listed.end());
    for (std::uint32_t f = 0; f < mesh.face_count(); ++f) {
      const auto& face = mesh.faces()[f];
      const bool has_a = face[0] == edge.a || face[1] == edge.a || face[2] == edge.a;
      const bool has_b = face[0] == edge.b || face[1] == edge.b || face[2] == edge.b;
      EXPECT_EQ(listed_set.count(f) == 1, has_a && has_b);
    }
  }
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    for (auto f : mesh.vertex_faces(v)) {
      const auto& face = mesh.faces()[f];
      EXPECT_TRUE(face[0] == v || face[1] == v || face[2] == v);
    }
  }
}

TEST(TriangleMesh, ObjRoundTripIsExact) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mesh = fixtures::perturbed(fixtures::icosphere(1), 0.1, rng());
    std::stringstream buf;
    write_obj(buf, mesh);
    const auto again = parse_obj(buf);
    ASSERT_EQ(again.vertex_count(), mesh.vertex_count());
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
      EXPECT_EQ(again.vertices()[i], mesh.vertices()[i]);
    }
    ASSERT_EQ(again.face_count(), mesh.face_count());
    for (std::size_t i = 0; i < mesh.face_count(); ++i) {
      EXPECT_EQ(again.faces()[i], mesh.faces()[i]);
    }
  }
}

TEST(TriangleMesh, PlyRoundTripIsExact) {
  const auto mesh = fixtures::perturbed(fixtures::icosphere(1), 0.1, 11);
  std::stringstream buf;
  write_ply_ascii(buf, mesh);
  const auto again = parse_ply_ascii(buf);
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    EXPECT_EQ(again.vertices()[i], mesh.vertices()[i]);
  }
  for (std::size_t i = 0; i < mesh.face_count(); ++i) EXPECT_EQ(again.faces()[i], mesh.faces()[i]);
}

TEST(ParseMesh, DispatchesOnExtension) {
  const auto dir = fixtures::scratch_dir("parse_mesh");
  {
    std::ofstream(dir / "cube.OBJ") << kCubeObj;
    std::ofstream ply(dir / "tet.ply");
    write_ply_ascii(ply, fixtures::regular_tetrahedron());
  }
  EXPECT_EQ(parse_mesh(dir / "cube.OBJ").face_count(), 12u);
  EXPECT_EQ(parse_mesh(dir / "tet.ply").face_count(), 4u);
  EXPECT_EQ(kind_of([&] { parse_mesh(dir / "mesh.stl"); }), ErrorKind::InvalidArgument);
}
