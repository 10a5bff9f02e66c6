#ifndef TESSGOF_GEOMETRY_HPP
#define TESSGOF_GEOMETRY_HPP

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "tessgof/errors.hpp"
#include "tessgof/measures.hpp"

namespace tessgof {

using Vec3 = Eigen::Vector3d;
using Shift = Eigen::Vector3i;

struct Window {
  double edge_length = 1.0;
  bool periodic = true;

  double volume() const { return edge_length * edge_length * edge_length; }
};

/// Generator location in [0, L)^3 with Laguerre radius (weight = radius^2).
struct MarkedPoint {
  Vec3 location = Vec3::Zero();
  double radius = 0.0;
};

/// Reference to another face, possibly through a periodic image. A face's
/// coordinates live in its own frame; `shift` translates the referenced
/// face's frame into the referencing face's frame (in window units).
struct FaceRef {
  int id = -1;
  Shift shift = Shift::Zero();

  friend bool operator==(const FaceRef& a, const FaceRef& b) { return a.id == b.id && a.shift == b.shift; }
};

/// One q-face of the tessellation. For 2-faces `vertices` is in cyclic order
/// and `boundary[j]` is the edge from vertex j to vertex j+1.
struct Face {
  std::vector<int> vertices;
  std::vector<Shift> vertex_shift;
  Eigen::Matrix3Xd coords;           // vertex positions in this face's frame
  std::vector<FaceRef> boundary;     // (q-1)-faces
  std::vector<FaceRef> cofaces;      // (q+1)-faces
  std::vector<FaceRef> cells;        // incident generators, images in this frame
  int owner = -1;                    // incident generator with lexicographically minimal location
  bool on_boundary = false;          // lies in the window boundary (non-periodic only)
  bool touches_boundary = false;     // has a vertex in the window boundary
};

/// Face lattice of a Laguerre tessellation of a cubic window. Immutable once
/// built; share freely between threads.
class Tessellation {
 public:
  Tessellation() = default;
  Tessellation(Window window, int dim, std::vector<MarkedPoint> generators, std::vector<bool> empty_cell,
               std::array<std::vector<Face>, 4> faces);

  const Window& window() const { return window_; }
  int dim() const { return dim_; }
  const std::vector<MarkedPoint>& generators() const { return generators_; }
  bool cell_is_empty(int generator) const { return empty_[generator]; }
  const std::vector<bool>& empty_cells() const { return empty_; }
  /// Generator whose cell is the given cell record.
  int cell_generator(int cell_id) const { return faces_[dim_][cell_id].cells.front().id; }

  const std::vector<Face>& faces(int q) const { return faces_.at(q); }
  const Face& face(int q, int id) const { return faces_.at(q).at(id); }
  std::size_t count(int q) const { return faces_.at(q).size(); }

  /// Location of a generator image expressed in a face frame.
  Vec3 center(const FaceRef& cell) const {
    return generators_[cell.id].location + window_.edge_length * cell.shift.cast<double>();
  }
  /// Vertex average of a face in its own frame.
  Vec3 centroid(int q, int id) const { return faces_[q][id].coords.rowwise().mean(); }

  /// V - E + F - C (alternating face count).
  long euler_characteristic() const;

  /// Throws InvariantError naming the first violated structural check.
  void validate() const;

 private:
  Window window_;
  int dim_ = 3;
  std::vector<MarkedPoint> generators_;
  std::vector<bool> empty_;
  std::array<std::vector<Face>, 4> faces_;
};

/// Relative tolerance on power-equidistance tests (units of L^2).
inline constexpr double kDegeneracyTolerance = 1e-12;

/// Laguerre (power) tessellation of the window. Cells are built by clipping
/// with power half-spaces; faces are identified across cells by the sorted
/// tuple of generating sites modulo periodic translation.
Tessellation build_laguerre(std::span<const MarkedPoint> points, const Window& window);

/// Voronoi tessellation: build_laguerre with all radii zero.
Tessellation build_voronoi(std::span<const Vec3> locations, const Window& window);

/// Polygon area of a 2-face.
double face_area(const Tessellation& tess, int face_id);

/// Covering radius of a 2-face by its boundary edges, optionally thickened
/// with per-edge thicknesses indexed by global edge id.
double face_inradius(const Tessellation& tess, int face_id, std::span<const double> edge_thickness = {});

/// Max distance from the face to the centres of its incident cells. For q = 2
/// this is the two-cell eccentricity; other q use all incident cells.
double face_eccentricity(const Tessellation& tess, int q, int face_id);

}  // namespace tessgof

#endif  // TESSGOF_GEOMETRY_HPP
