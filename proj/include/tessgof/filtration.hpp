#ifndef TESSGOF_FILTRATION_HPP
#define TESSGOF_FILTRATION_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "tessgof/geometry.hpp"

namespace tessgof {

struct ThicknessLaw {
  enum class Kind { none, constant, uniform };
  Kind kind = Kind::none;
  double a = 0.0;  // constant value, or lower bound
  double b = 0.0;  // upper bound (uniform)
};

/// Measurement noise: every vertex moves by a uniform draw from the ball of
/// radius h0 (one draw per vertex, shared by all faces), and every edge gets
/// a thickness from `thickness`.
struct NoiseConfig {
  double vertex_noise_h0 = 0.0;
  ThicknessLaw thickness;
  std::uint64_t seed = 0;
};

/// One face of a filtered complex. `boundary` holds positions in the
/// filtration order, not face ids.
struct FilteredFace {
  int dim = 0;
  int face = -1;
  double value = 0.0;
  Vec3 center = Vec3::Zero();
  std::vector<int> vertices;  // sorted vertex ids
  std::vector<int> boundary;
};

struct FilteredComplex {
  std::vector<FilteredFace> faces;         // in filtration order
  std::array<std::vector<int>, 4> index;   // (dim, face id) -> position, -1 when absent
  std::vector<double> edge_thickness;      // by global edge id; empty without a thickness law
  int fixups = 0;                          // faces raised to their boundary's maximum beyond rounding

  std::size_t size() const { return faces.size(); }
  int position(int dim, int face) const { return index.at(dim).at(face); }
  int max_dim() const;
};

/// Input record for assembling a complex by hand: boundary as face ids of dimension dim - 1.
struct FaceSpec {
  int dim = 0;
  int face = -1;
  double value = 0.0;
  Vec3 center = Vec3::Zero();
  std::vector<int> vertices;
  std::vector<int> boundary;
};

/// Sorts by (value, dimension, center lexicographic, face id) and links boundaries.
/// Throws InvariantError when a boundary face is missing.
FilteredComplex assemble_complex(std::vector<FaceSpec> specs);

/// Tessellation-adapted filtration: every face enters at the circumradius of
/// its (perturbed) vertex set.
FilteredComplex build_filtration(const Tessellation& tess, const NoiseConfig& noise = {});

/// Edge thicknesses by global edge id drawn from noise.thickness; empty for Kind::none.
std::vector<double> sample_edge_thickness(const Tessellation& tess, const NoiseConfig& noise);

/// Subcomplex of the faces with keep[position] set, in the original order.
/// Throws InvariantError when a kept face has a dropped boundary face.
FilteredComplex restrict_complex(const FilteredComplex& complex, const std::vector<char>& keep);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// q-faces with eccentricity <= M and, for q = 2, inradius >= min_inradius
/// (negative: 1/M). M = infinity keeps every face. For finite M, faces in the
/// boundary of a bounded window are dropped.
std::vector<int> select_faces(const Tessellation& tess, int q, double M, double min_inradius = -1.0);

/// CSV: position,dim,face,value,vertices (space separated).
void write_filtration_csv(std::ostream& out, const FilteredComplex& complex);

}  // namespace tessgof

#endif  // TESSGOF_FILTRATION_HPP
