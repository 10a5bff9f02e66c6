#ifndef TESSGOF_PERSISTENCE_HPP
#define TESSGOF_PERSISTENCE_HPP

#include <iosfwd>
#include <span>
#include <vector>

#include "tessgof/filtration.hpp"

namespace tessgof {

/// A birth-death pair. Features alive at the end of the filtration are
/// `essential`, carry death = value of the last face and killing_face = -1.
struct Feature {
  int dim = 0;
  double birth = 0.0;
  double death = 0.0;
  int birth_face = -1;
  int killing_face = -1;
  int birth_position = -1;
  int death_position = -1;
  bool essential = false;

  double lifetime() const { return death - birth; }
};

struct PersistenceDiagram {
  std::vector<Feature> features;  // sorted by (dim, birth position)

  /// Features of dimension q, optionally without essential ones.
  std::vector<Feature> of_dim(int q, bool include_essential = true) const;
};

/// Z/2 column reduction of the boundary matrix with clearing. Zero-persistence
/// pairs are kept. Throws InvariantError when a face precedes its boundary.
PersistenceDiagram reduce(const FilteredComplex& complex);

/// Pivot partner of every position: the killing face for positive faces that
/// die, the birth face for negative faces, -1 otherwise.
std::vector<int> persistence_pairing(const FilteredComplex& complex);

/// #{q-features with birth <= b and death >= d}; essential features never die.
int persistent_betti(const PersistenceDiagram& diagram, int q, double b, double d);

/// q-features alive at s: birth <= s < death.
int betti_at(const PersistenceDiagram& diagram, int q, double s);

/// chi(s) = sum_q (-1)^q #{q-faces with value <= s} for each s of a sorted grid.
std::vector<long> euler_curve(const FilteredComplex& complex, std::span<const double> grid);

/// Birth and death of the feature killed by one (q+1)-face inside its local window.
struct LocalFeature {
  int face = -1;          // id of the (q+1)-face
  bool negative = false;  // kills a q-feature in the local complex
  double birth = 0.0;
  double death = 0.0;
};

struct LocalizedResult {
  std::vector<LocalFeature> features;  // one per selected (q+1)-face, by face id
  int distinct_complexes = 0;          // local reductions actually run
};

/// Positions of the global complex whose faces lie (through some periodic
/// image) in the cube z + [-M, M]^3.
std::vector<char> local_window_mask(const Tessellation& tess, const FilteredComplex& complex, const Vec3& z, double M);

/// For every (q+1)-face selected at level M, reduce the complex of faces inside
/// its centroid's M-window and record whether it kills a q-feature there.
/// Identical local complexes are reduced once. Runs on `workers` threads (0 = all cores).
/// min_inradius is passed to select_faces.
LocalizedResult m_localized_features(const Tessellation& tess, const FilteredComplex& complex, double M, int q,
                                     double min_inradius = -1.0, int workers = 0);

/// #{selected faces that kill a q-feature locally with b(f) <= b and d(f) >= d}.
int m_localized_betti(const Tessellation& tess, double M, int q, double b, double d, const NoiseConfig& noise = {},
                      double min_inradius = -1.0, int workers = 0);
int m_localized_betti(const LocalizedResult& local, double b, double d);

/// CSV: dim,birth,death,birth_face,killing_face,essential.
void write_diagram_csv(std::ostream& out, const PersistenceDiagram& diagram);

}  // namespace tessgof

#endif  // TESSGOF_PERSISTENCE_HPP
