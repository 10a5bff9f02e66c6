#include "tessgof/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "tessgof/generators.hpp"

namespace tessgof {

namespace {

bool filtration_less(const FilteredFace& a, const FilteredFace& b) {
  if (a.value != b.value) return a.value < b.value;
  if (a.dim != b.dim) return a.dim < b.dim;
  for (int k = 0; k < 3; ++k)
    if (a.center[k] != b.center[k]) return a.center[k] < b.center[k];
  return a.face < b.face;
}

// Sorts `faces` (boundaries given as face ids) and rewrites boundaries to positions.
FilteredComplex finish(std::vector<FilteredFace> faces) {
  FilteredComplex c;
  std::array<int, 4> max_id{-1, -1, -1, -1};
  for (const auto& f : faces) {
    if (f.dim < 0 || f.dim > 3) throw InvariantError("face dimension must lie in 0..3");
    max_id[f.dim] = std::max(max_id[f.dim], f.face);
  }
  std::sort(faces.begin(), faces.end(), filtration_less);
  for (int q = 0; q < 4; ++q) c.index[q].assign(max_id[q] + 1, -1);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    int& slot = c.index[faces[i].dim][faces[i].face];
    if (slot >= 0) throw InvariantError("face listed twice");
    slot = static_cast<int>(i);
  }
  for (auto& f : faces) {
    for (int& b : f.boundary) {
      const auto& ids = c.index[f.dim - 1];
      if (f.dim == 0 || b < 0 || b >= static_cast<int>(ids.size()) || ids[b] < 0)
        throw InvariantError("boundary face missing from complex");
      b = ids[b];
    }
  }
  c.faces = std::move(faces);
  return c;
}

Vec3 wrap_point(Vec3 x, const Window& w) {
  if (w.periodic)
    for (int k = 0; k < 3; ++k) x[k] -= w.edge_length * std::floor(x[k] / w.edge_length);
  return x;
}

}  // namespace

int FilteredComplex::max_dim() const {
  int d = 0;
  for (const auto& f : faces) d = std::max(d, f.dim);
  return d;
}

FilteredComplex assemble_complex(std::vector<FaceSpec> specs) {
  std::vector<FilteredFace> faces;
  faces.reserve(specs.size());
  for (auto& s : specs) {
    std::sort(s.vertices.begin(), s.vertices.end());
    faces.push_back({s.dim, s.face, s.value, s.center, std::move(s.vertices), std::move(s.boundary)});
  }
  return finish(std::move(faces));
}

FilteredComplex build_filtration(const Tessellation& tess, const NoiseConfig& noise) {
  if (!(noise.vertex_noise_h0 >= 0)) throw DomainError("vertex noise radius must be nonnegative");
  const std::size_t nv = tess.count(0);

  // One perturbation per vertex, uniform in the ball of radius h0.
  std::vector<Vec3> eta(nv, Vec3::Zero());
  if (noise.vertex_noise_h0 > 0) {
    std::mt19937_64 rng(mix_seed(noise.seed));
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Vec3& e : eta) {
      const Vec3 dir = Vec3(g(rng), g(rng), g(rng)).normalized();
      e = noise.vertex_noise_h0 * std::cbrt(u(rng)) * dir;
    }
  }

  std::vector<FilteredFace> faces;
  for (int q = 0; q <= tess.dim(); ++q) {
    for (int id = 0; id < static_cast<int>(tess.count(q)); ++id) {
      const Face& f = tess.face(q, id);
      Points3<double> pts = f.coords;
      for (Eigen::Index k = 0; k < pts.cols(); ++k) pts.col(k) += eta[f.vertices[k]];
      const Ball<double> ball = min_enclosing_ball(pts);
      FilteredFace ff;
      ff.dim = q;
      ff.face = id;
      ff.value = ball.radius;
      ff.center = wrap_point(ball.center, tess.window());
      ff.vertices = f.vertices;
      std::sort(ff.vertices.begin(), ff.vertices.end());
      ff.vertices.erase(std::unique(ff.vertices.begin(), ff.vertices.end()), ff.vertices.end());
      for (const FaceRef& b : f.boundary) ff.boundary.push_back(b.id);
      faces.push_back(std::move(ff));
    }
  }

  // Monotonicity fix-up in dimension order (boundaries come first in `faces`).
  int fixups = 0;
  std::array<std::size_t, 5> offset{};
  for (int q = 0; q <= tess.dim(); ++q) offset[q + 1] = offset[q] + tess.count(q);
  for (auto& f : faces) {
    if (f.dim == 0) continue;
    double m = f.value;
    for (int b : f.boundary) m = std::max(m, faces[offset[f.dim - 1] + b].value);
    if (m > f.value) {
      if (m - f.value > 1e-12 * std::max(1.0, m)) ++fixups;
      f.value = m;
    }
  }

  FilteredComplex c = finish(std::move(faces));
  c.fixups = fixups;

  c.edge_thickness = sample_edge_thickness(tess, noise);
  return c;
}

std::vector<double> sample_edge_thickness(const Tessellation& tess, const NoiseConfig& noise) {
  const auto& law = noise.thickness;
  if (law.kind == ThicknessLaw::Kind::none) return {};
  if (!(law.a >= 0) || (law.kind == ThicknessLaw::Kind::uniform && !(law.b >= law.a)))
    throw DomainError("edge thickness law needs 0 <= a <= b");
  std::vector<double> out(tess.count(1), law.a);
  if (law.kind == ThicknessLaw::Kind::uniform) {
    std::mt19937_64 rng(mix_seed(noise.seed ^ 0x7468696bULL));
    std::uniform_real_distribution<double> u(law.a, law.b);
    for (double& t : out) t = u(rng);
  }
  return out;
}

FilteredComplex restrict_complex(const FilteredComplex& complex, const std::vector<char>& keep) {
  if (keep.size() != complex.size()) throw DomainError("restrict_complex: mask size differs from complex size");
  FilteredComplex out;
  std::vector<int> remap(complex.size(), -1);
  for (int q = 0; q < 4; ++q) out.index[q].assign(complex.index[q].size(), -1);
  for (std::size_t i = 0; i < complex.size(); ++i) {
    if (!keep[i]) continue;
    const FilteredFace& f = complex.faces[i];
    FilteredFace g = f;
    for (int& b : g.boundary) {
      if (remap[b] < 0) throw InvariantError("restricted complex is not closed under taking boundaries");
      b = remap[b];
    }
    remap[i] = static_cast<int>(out.faces.size());
    out.index[f.dim][f.face] = remap[i];
    out.faces.push_back(std::move(g));
  }
  out.edge_thickness = complex.edge_thickness;
  return out;
}

std::vector<int> select_faces(const Tessellation& tess, int q, double M, double min_inradius) {
  if (q < 0 || q > tess.dim()) throw DomainError("select_faces: dimension out of range");
  if (!(M > 0)) throw DomainError("select_faces: M must be positive");
  const double floor = min_inradius < 0 ? 1.0 / M : min_inradius;
  std::vector<int> out;
  const int n = static_cast<int>(tess.count(q));
  for (int id = 0; id < n; ++id) {
    if (std::isinf(M)) {
      out.push_back(id);
      continue;
    }
    const Face& f = tess.face(q, id);
    if (!tess.window().periodic && f.on_boundary) continue;
    if (face_eccentricity(tess, q, id) > M) continue;
    if (q == 2 && face_inradius(tess, id) < floor) continue;
    out.push_back(id);
  }
  return out;
}

void write_filtration_csv(std::ostream& out, const FilteredComplex& complex) {
  out << "position,dim,face,value,vertices\n";
  char buf[32];
  for (std::size_t i = 0; i < complex.size(); ++i) {
    const FilteredFace& f = complex.faces[i];
    std::snprintf(buf, sizeof buf, "%.17g", f.value);
    out << i << ',' << f.dim << ',' << f.face << ',' << buf << ',';
    for (std::size_t k = 0; k < f.vertices.size(); ++k) out << (k ? " " : "") << f.vertices[k];
    out << '\n';
  }
}

}  // namespace tessgof
