#ifndef TESSGOF_TESTS_TEST_UTIL_HPP
#define TESSGOF_TESTS_TEST_UTIL_HPP

#include <array>
#include <random>
#include <string>
#include <vector>

#include "tessgof/geometry.hpp"

namespace testutil {

inline std::vector<tessgof::Vec3> uniform_points(int n, double len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, len);
  std::vector<tessgof::Vec3> pts(n);
  for (auto& p : pts) p = tessgof::Vec3(u(rng), u(rng), u(rng));
  return pts;
}

inline std::vector<tessgof::MarkedPoint> marked_points(int n, double len, double rmin, double rmax,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, len), r(rmin, rmax);
  std::vector<tessgof::MarkedPoint> pts(n);
  for (auto& p : pts) {
    p.location = tessgof::Vec3(u(rng), u(rng), u(rng));
    p.radius = r(rng);
  }
  return pts;
}

inline std::vector<tessgof::MarkedPoint> with_radius(const std::vector<tessgof::Vec3>& loc, double r) {
  std::vector<tessgof::MarkedPoint> out;
  for (const auto& x : loc) out.push_back({x, r});
  return out;
}

}  // namespace testutil



namespace testutil {

// One polytope as a bounded-window tessellation: polygons are cyclic vertex
// lists. For dim 2 the single polygon is the cell; for dim 3 the polygons
// bound one 3-cell.
inline tessgof::Tessellation single_cell(int dim, const std::vector<tessgof::Vec3>& verts,
                                         const std::vector<std::array<int, 2>>& edges,
                                         const std::vector<std::vector<int>>& polys) {
  using namespace tessgof;
  const FaceRef cell{0, Shift::Zero()};
  std::array<std::vector<Face>, 4> faces;
  auto make = [&](const std::vector<int>& vs) {
    Face f;
    f.vertices = vs;
    f.vertex_shift.assign(vs.size(), Shift::Zero());
    f.coords.resize(3, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t k = 0; k < vs.size(); ++k) f.coords.col(static_cast<Eigen::Index>(k)) = verts[vs[k]];
    f.cells = {cell};
    return f;
  };
  for (int v = 0; v < static_cast<int>(verts.size()); ++v) faces[0].push_back(make({v}));
  for (const auto& e : edges) {
    Face f = make({e[0], e[1]});
    f.boundary = {FaceRef{e[0], Shift::Zero()}, FaceRef{e[1], Shift::Zero()}};
    faces[1].push_back(f);
  }
  for (const auto& poly : polys) {
    Face f = make(poly);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      const int a = poly[j], b = poly[(j + 1) % poly.size()];
      for (int e = 0; e < static_cast<int>(edges.size()); ++e)
        if ((edges[e][0] == a && edges[e][1] == b) || (edges[e][0] == b && edges[e][1] == a))
          f.boundary.push_back(FaceRef{e, Shift::Zero()});
    }
    faces[2].push_back(f);
  }
  if (dim == 3) {
    std::vector<int> all(verts.size());
    for (int v = 0; v < static_cast<int>(verts.size()); ++v) all[v] = v;
    Face c = make(all);
    for (int p = 0; p < static_cast<int>(polys.size()); ++p) c.boundary.push_back(FaceRef{p, Shift::Zero()});
    faces[3].push_back(c);
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& v : verts) mean += v;
  mean /= static_cast<double>(verts.size());
  Tessellation t(Window{10.0, false}, dim, {MarkedPoint{mean, 0.0}}, {false}, faces);
  t.validate();
  return t;
}

// The quadrilateral of the tessellation-adapted filtration figure: four
// vertices, four edges, one 2-cell, no diagonal.
inline tessgof::Tessellation quadrilateral() {
  using tessgof::Vec3;
  return single_cell(2, {Vec3(1, 1, 1), Vec3(3, 1.2, 1), Vec3(3.4, 2.6, 1), Vec3(1.3, 2.2, 1)},
                     {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {{0, 1, 2, 3}});
}

// Regular tetrahedron with edge 2 sqrt(2).
inline tessgof::Tessellation tetrahedron() {
  using tessgof::Vec3;
  return single_cell(3, {Vec3(3, 3, 3), Vec3(3, 1, 1), Vec3(1, 3, 1), Vec3(1, 1, 3)},
                     {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
                     {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
}

}  // namespace testutil



namespace testutil {

// Empty string when the two tessellations have the same face lattice and
// vertex coordinates agree within `tol`; otherwise a description of the first difference.
inline std::string lattice_difference(const tessgof::Tessellation& a, const tessgof::Tessellation& b, double tol) {
  if (a.dim() != b.dim()) return "dimension";
  if (a.generators().size() != b.generators().size()) return "generator count";
  if (a.empty_cells() != b.empty_cells()) return "empty-cell flags";
  for (int q = 0; q <= a.dim(); ++q) {
    if (a.count(q) != b.count(q)) return "count of " + std::to_string(q) + "-faces";
    for (std::size_t i = 0; i < a.count(q); ++i) {
      const auto& fa = a.face(q, static_cast<int>(i));
      const auto& fb = b.face(q, static_cast<int>(i));
      const std::string where = std::to_string(q) + "-face " + std::to_string(i) + ": ";
      if (fa.vertices != fb.vertices) return where + "vertices";
      if (fa.vertex_shift != fb.vertex_shift) return where + "vertex shifts";
      if (fa.boundary != fb.boundary) return where + "boundary";
      if (fa.cofaces != fb.cofaces) return where + "cofaces";
      if (fa.cells != fb.cells) return where + "cells";
      if (fa.owner != fb.owner) return where + "owner";
      if (fa.on_boundary != fb.on_boundary || fa.touches_boundary != fb.touches_boundary) return where + "flags";
      if ((fa.coords - fb.coords).cwiseAbs().maxCoeff() > tol) return where + "coordinates";
    }
  }
  return {};
}

}  // namespace testutil

#endif  // TESSGOF_TESTS_TEST_UTIL_HPP
