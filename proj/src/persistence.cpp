#include "tessgof/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "tessgof/parallel.hpp"

namespace tessgof {

namespace {

// Symmetric difference of two ascending index lists (column addition over Z/2).
void add_column(std::vector<int>& col, const std::vector<int>& other, std::vector<int>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(), std::back_inserter(scratch));
  col.swap(scratch);
}

std::vector<int> boundary_column(const FilteredFace& f) {
  std::vector<int> col = f.boundary;
  std::sort(col.begin(), col.end());
  // Faces meeting a boundary face twice (through two periodic images) cancel mod 2.
  std::vector<int> out;
  for (std::size_t i = 0; i < col.size();) {
    std::size_t j = i;
    while (j < col.size() && col[j] == col[i]) ++j;
    if ((j - i) % 2 == 1) out.push_back(col[i]);
    i = j;
  }
  return out;
}

struct Extent {
  Vec3 lo, hi;
};

std::vector<std::vector<Extent>> face_extents(const Tessellation& tess) {
  std::vector<std::vector<Extent>> ext(tess.dim() + 1);
  for (int q = 0; q <= tess.dim(); ++q) {
    ext[q].resize(tess.count(q));
    for (std::size_t i = 0; i < tess.count(q); ++i) {
      const auto& c = tess.face(q, static_cast<int>(i)).coords;
      ext[q][i] = {c.rowwise().minCoeff(), c.rowwise().maxCoeff()};
    }
  }
  return ext;
}

bool in_window(const Extent& e, const Vec3& z, double M, const Window& w) {
  const double tol = 1e-12 * w.edge_length;
  for (int k = 0; k < 3; ++k) {
    double shift = 0.0;
    if (w.periodic) shift = w.edge_length * std::ceil((z[k] - M - e.lo[k] - tol) / w.edge_length);
    if (e.lo[k] + shift < z[k] - M - tol || e.hi[k] + shift > z[k] + M + tol) return false;
  }
  return true;
}

std::vector<char> window_mask(const Tessellation& tess, const FilteredComplex& complex,
                              const std::vector<std::vector<Extent>>& ext, const Vec3& z, double M) {
  std::vector<char> keep(complex.size(), 0);
  for (std::size_t i = 0; i < complex.size(); ++i) {
    const FilteredFace& f = complex.faces[i];
    keep[i] = in_window(ext[f.dim][f.face], z, M, tess.window()) ? 1 : 0;
  }
  return keep;
}

void check_localization(const Tessellation& tess, double M, int q) {
  if (!(M > 0)) throw DomainError("M must be positive");
  if (tess.window().periodic && !(2 * M < tess.window().edge_length))
    throw DomainError("M must be below half the window edge in a periodic window");
  if (q < 0 || q >= tess.dim()) throw DomainError("feature dimension must lie in 0..p-1");
}

}  // namespace

std::vector<Feature> PersistenceDiagram::of_dim(int q, bool include_essential) const {
  std::vector<Feature> out;
  for (const Feature& f : features)
    if (f.dim == q && (include_essential || !f.essential)) out.push_back(f);
  return out;
}

std::vector<int> persistence_pairing(const FilteredComplex& complex) {
  const int n = static_cast<int>(complex.size());
  std::array<std::vector<int>, 4> by_dim;
  for (int j = 0; j < n; ++j) {
    const FilteredFace& f = complex.faces[j];
    for (int b : f.boundary)
      if (b >= j || complex.faces[b].dim != f.dim - 1)
        throw InvariantError("filtration order violated at position " + std::to_string(j) + ": face enters before its boundary");
    by_dim[f.dim].push_back(j);
  }

  std::vector<int> partner(n, -1);
  std::vector<int> pivot_owner(n, -1);
  std::vector<char> cleared(n, 0);
  std::vector<std::vector<int>> reduced(n);
  std::vector<int> scratch;
  // Highest dimension first, so that pivots of dimension d clear columns of dimension d - 1.
  for (int d = 3; d >= 1; --d) {
    for (int j : by_dim[d]) {
      if (cleared[j]) continue;
      std::vector<int> col = boundary_column(complex.faces[j]);
      while (!col.empty()) {
        const int owner = pivot_owner[col.back()];
        if (owner < 0) break;
        add_column(col, reduced[owner], scratch);
      }
      if (col.empty()) continue;
      const int low = col.back();
      pivot_owner[low] = j;
      partner[low] = j;
      partner[j] = low;
      cleared[low] = 1;
      reduced[j] = std::move(col);
    }
  }
  return partner;
}

PersistenceDiagram reduce(const FilteredComplex& complex) {
  const std::vector<int> partner = persistence_pairing(complex);
  PersistenceDiagram dgm;
  const int n = static_cast<int>(complex.size());
  const double last = n > 0 ? complex.faces.back().value : 0.0;
  for (int i = 0; i < n; ++i) {
    const FilteredFace& f = complex.faces[i];
    if (partner[i] >= 0 && partner[i] < i) continue;
    Feature ft;
    ft.dim = f.dim;
    ft.birth = f.value;
    ft.birth_face = f.face;
    ft.birth_position = i;
    if (partner[i] > i) {
      const FilteredFace& g = complex.faces[partner[i]];
      ft.death = g.value;
      ft.killing_face = g.face;
      ft.death_position = partner[i];
    } else {
      ft.death = last;
      ft.essential = true;
    }
    dgm.features.push_back(ft);
  }
  std::stable_sort(dgm.features.begin(), dgm.features.end(),
                   [](const Feature& a, const Feature& b) { return a.dim < b.dim; });
  return dgm;
}

int persistent_betti(const PersistenceDiagram& dgm, int q, double b, double d) {
  if (b > d) throw DomainError("persistent_betti: need b <= d");
  int count = 0;
  for (const Feature& f : dgm.features)
    if (f.dim == q && f.birth <= b && (f.essential || f.death >= d)) ++count;
  return count;
}

int betti_at(const PersistenceDiagram& dgm, int q, double s) {
  int count = 0;
  for (const Feature& f : dgm.features)
    if (f.dim == q && f.birth <= s && (f.essential || f.death > s)) ++count;
  return count;
}

std::vector<long> euler_curve(const FilteredComplex& complex, std::span<const double> grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw DomainError("euler_curve: grid must be sorted");
  std::vector<long> out(grid.size(), 0);
  // Faces are sorted by value, so one merge pass suffices.
  long chi = 0;
  std::size_t i = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (i < complex.size() && complex.faces[i].value <= grid[g]) {
      chi += complex.faces[i].dim % 2 == 0 ? 1 : -1;
      ++i;
    }
    out[g] = chi;
  }
  return out;
}

std::vector<char> local_window_mask(const Tessellation& tess, const FilteredComplex& complex, const Vec3& z, double M) {
  return window_mask(tess, complex, face_extents(tess), z, M);
}

LocalizedResult m_localized_features(const Tessellation& tess, const FilteredComplex& complex, double M, int q,
                                     double min_inradius, int workers) {
  check_localization(tess, M, q);
  const std::vector<int> faces = select_faces(tess, q + 1, M, min_inradius);
  const auto ext = face_extents(tess);

  std::vector<std::vector<char>> masks(faces.size());
  parallel_for(faces.size(), workers, [&](std::size_t k) {
    masks[k] = window_mask(tess, complex, ext, tess.centroid(q + 1, faces[k]), M);
  });

  // Faces whose windows hold the same set of faces share one reduction.
  std::map<std::vector<char>, int> groups;
  std::vector<int> group_of(faces.size());
  std::vector<const std::vector<char>*> group_mask;
  for (std::size_t k = 0; k < faces.size(); ++k) {
    auto [it, fresh] = groups.try_emplace(masks[k], static_cast<int>(group_mask.size()));
    if (fresh) group_mask.push_back(&it->first);
    group_of[k] = it->second;
  }

  struct Local {
    FilteredComplex complex;
    std::vector<int> partner;
  };
  std::vector<Local> local(group_mask.size());
  parallel_for(local.size(), workers, [&](std::size_t g) {
    local[g].complex = restrict_complex(complex, *group_mask[g]);
    local[g].partner = persistence_pairing(local[g].complex);
  });

  LocalizedResult out;
  out.distinct_complexes = static_cast<int>(local.size());
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const Local& l = local[group_of[k]];
    LocalFeature lf;
    lf.face = faces[k];
    const auto& idx = l.complex.index[q + 1];
    const int pos = faces[k] < static_cast<int>(idx.size()) ? idx[faces[k]] : -1;
    if (pos >= 0 && l.partner[pos] >= 0 && l.partner[pos] < pos) {
      lf.negative = true;
      lf.birth = l.complex.faces[l.partner[pos]].value;
      lf.death = l.complex.faces[pos].value;
    }
    out.features.push_back(lf);
  }
  return out;
}

int m_localized_betti(const LocalizedResult& local, double b, double d) {
  if (b > d) throw DomainError("m_localized_betti: need b <= d");
  int count = 0;
  for (const LocalFeature& f : local.features)
    if (f.negative && f.birth <= b && f.death >= d) ++count;
  return count;
}

int m_localized_betti(const Tessellation& tess, double M, int q, double b, double d, const NoiseConfig& noise,
                      double min_inradius, int workers) {
  if (b > d) throw DomainError("m_localized_betti: need b <= d");
  const FilteredComplex complex = build_filtration(tess, noise);
  return m_localized_betti(m_localized_features(tess, complex, M, q, min_inradius, workers), b, d);
}

void write_diagram_csv(std::ostream& out, const PersistenceDiagram& dgm) {
  out << "dim,birth,death,birth_face,killing_face,essential\n";
  char b[32], d[32];
  for (const Feature& f : dgm.features) {
    std::snprintf(b, sizeof b, "%.17g", f.birth);
    std::snprintf(d, sizeof d, "%.17g", f.death);
    out << f.dim << ',' << b << ',' << d << ',' << f.birth_face << ',' << f.killing_face << ',' << (f.essential ? 1 : 0)
        << '\n';
  }
}

}  // namespace tessgof
