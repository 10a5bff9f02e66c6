#include "tessgof/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>

namespace tessgof {

namespace {

// A generating site: generator id plus periodic image, or a window wall
// (gid = -1 - wall index, shift zero).
struct Site {
  int gid = 0;
  Shift shift = Shift::Zero();

  bool is_wall() const { return gid < 0; }
  friend bool operator<(const Site& a, const Site& b) {
    return std::tie(a.gid, a.shift.x(), a.shift.y(), a.shift.z()) <
           std::tie(b.gid, b.shift.x(), b.shift.y(), b.shift.z());
  }
  friend bool operator==(const Site& a, const Site& b) { return a.gid == b.gid && a.shift == b.shift; }
};

using Key = std::vector<Site>;

struct Canonical {
  Key key;
  Shift translation;  // key + translation = the sites as given
};

// Canonical representative of a site tuple modulo lattice translation: the
// lexicographically smallest sorted tuple over all choices of anchor site.
Canonical canonicalize(const Key& sites) {
  Canonical best;
  bool have = false;
  for (const Site& anchor : sites) {
    if (anchor.is_wall()) continue;
    Key k = sites;
    for (Site& s : k) {
      if (!s.is_wall()) s.shift -= anchor.shift;
    }
    std::sort(k.begin(), k.end());
    if (!have || k < best.key) {
      best.key = std::move(k);
      best.translation = anchor.shift;
      have = true;
    }
  }
  return best;
}

struct PolyVertex {
  Vec3 pos;
  std::array<int, 3> planes;
};

struct PolyFace {
  int plane;
  std::vector<int> cycle;  // counter-clockwise seen from outside
};

// Convex polytope whose facets carry the label of the site that cut them.
class CellPolytope {
 public:
  CellPolytope(const Vec3& lo, const Vec3& hi) {
    for (int w = 0; w < 6; ++w) labels_.push_back(Site{-1 - w, Shift::Zero()});
    for (int idx = 0; idx < 8; ++idx) {
      const int bx = idx & 1, by = (idx >> 1) & 1, bz = (idx >> 2) & 1;
      verts_.push_back({Vec3(bx ? hi.x() : lo.x(), by ? hi.y() : lo.y(), bz ? hi.z() : lo.z()),
                        {bx ? 1 : 0, by ? 3 : 2, bz ? 5 : 4}});
      std::sort(verts_.back().planes.begin(), verts_.back().planes.end());
    }
    faces_ = {{0, {0, 4, 6, 2}}, {1, {1, 3, 7, 5}}, {2, {0, 1, 5, 4}},
              {3, {2, 6, 7, 3}}, {4, {0, 2, 3, 1}}, {5, {4, 5, 7, 6}}};
  }

  bool empty() const { return verts_.empty(); }
  const std::vector<PolyVertex>& vertices() const { return verts_; }
  const std::vector<PolyFace>& faces() const { return faces_; }
  const Site& label(int plane) const { return labels_[plane]; }

  double max_norm() const {
    double m = 0.0;
    for (const auto& v : verts_) m = std::max(m, v.pos.squaredNorm());
    return std::sqrt(m);
  }

  // Keep the half-space normal . x <= offset. Returns false when the cell
  // vanishes. Throws on a vertex within `tol` of the cutting plane.
  bool clip(const Vec3& normal, double offset, double tol, const Site& label) {
    std::vector<double> side(verts_.size());
    bool any_out = false, any_in = false;
    for (std::size_t v = 0; v < verts_.size(); ++v) {
      side[v] = normal.dot(verts_[v].pos) - offset;
      if (std::abs(side[v]) <= tol)
        throw DegenerateInputError("generators not in general position: vertex is power-equidistant to site " +
                                   std::to_string(label.gid) + " within tolerance");
      (side[v] > 0 ? any_out : any_in) = true;
    }
    if (!any_out) return true;
    if (!any_in) {
      verts_.clear();
      faces_.clear();
      return false;
    }
    const int plane = static_cast<int>(labels_.size());
    labels_.push_back(label);

    std::vector<PolyVertex> next;
    std::vector<int> remap(verts_.size(), -1);
    for (std::size_t v = 0; v < verts_.size(); ++v) {
      if (side[v] < 0) {
        remap[v] = static_cast<int>(next.size());
        next.push_back(verts_[v]);
      }
    }
    std::map<std::pair<int, int>, int> cut_of_edge;
    auto cut = [&](int u, int w) {
      const auto key = std::minmax(u, w);
      auto it = cut_of_edge.find(key);
      if (it != cut_of_edge.end()) return it->second;
      const double t = side[u] / (side[u] - side[w]);
      std::array<int, 3> common{};
      int nc = 0;
      for (int a : verts_[u].planes)
        for (int b : verts_[w].planes)
          if (a == b && nc < 3) common[nc++] = a;
      if (nc != 2) throw DegenerateInputError("generators not in general position: non-simple polytope vertex");
      std::array<int, 3> planes{common[0], common[1], plane};
      std::sort(planes.begin(), planes.end());
      const int id = static_cast<int>(next.size());
      next.push_back({verts_[u].pos + t * (verts_[w].pos - verts_[u].pos), planes});
      cut_of_edge.emplace(key, id);
      return id;
    };

    std::map<int, int> cap_next;
    std::vector<PolyFace> faces;
    for (const PolyFace& f : faces_) {
      PolyFace g{f.plane, {}};
      int exit_v = -1, entry_v = -1;
      const std::size_t k = f.cycle.size();
      for (std::size_t i = 0; i < k; ++i) {
        const int cur = f.cycle[i], nxt = f.cycle[(i + 1) % k];
        const bool cur_in = side[cur] < 0, nxt_in = side[nxt] < 0;
        if (cur_in) g.cycle.push_back(remap[cur]);
        if (cur_in != nxt_in) {
          const int w = cut(cur, nxt);
          g.cycle.push_back(w);
          (cur_in ? exit_v : entry_v) = w;
        }
      }
      if (g.cycle.size() >= 3) {
        if (exit_v >= 0) cap_next[entry_v] = exit_v;
        faces.push_back(std::move(g));
      }
    }
    PolyFace cap{plane, {}};
    if (!cap_next.empty()) {
      const int start = cap_next.begin()->first;
      int cur = start;
      do {
        cap.cycle.push_back(cur);
        auto it = cap_next.find(cur);
        if (it == cap_next.end() || cap.cycle.size() > cap_next.size())
          throw DegenerateInputError("generators not in general position: open cut polygon");
        cur = it->second;
      } while (cur != start);
    }
    if (cap.cycle.size() != cap_next.size() || cap.cycle.size() < 3)
      throw DegenerateInputError("generators not in general position: inconsistent cut polygon");
    faces.push_back(std::move(cap));
    verts_ = std::move(next);
    faces_ = std::move(faces);
    return true;
  }

 private:
  std::vector<Site> labels_;
  std::vector<PolyVertex> verts_;
  std::vector<PolyFace> faces_;
};

struct Candidate {
  double dist2;
  Site site;
  Vec3 offset;  // candidate location minus the cell's generator
};

CellPolytope build_cell(int i, std::span<const MarkedPoint> pts, const Window& window, double max_radius) {
  const double len = window.edge_length;
  const Vec3 xi = pts[i].location;
  const double ri2 = pts[i].radius * pts[i].radius;
  CellPolytope poly = window.periodic ? CellPolytope(Vec3::Constant(-len), Vec3::Constant(len))
                                      : CellPolytope(-xi, Vec3::Constant(len) - xi);

  std::vector<Candidate> cand;
  const int reach = window.periodic ? 1 : 0;
  cand.reserve(pts.size() * (window.periodic ? 27 : 1));
  for (int j = 0; j < static_cast<int>(pts.size()); ++j) {
    for (int sx = -reach; sx <= reach; ++sx)
      for (int sy = -reach; sy <= reach; ++sy)
        for (int sz = -reach; sz <= reach; ++sz) {
          const Shift s(sx, sy, sz);
          if (j == i && s.isZero()) continue;
          const Vec3 d = pts[j].location + len * s.cast<double>() - xi;
          cand.push_back({d.squaredNorm(), Site{j, s}, d});
        }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist2, a.site) < std::tie(b.dist2, b.site);
  });

  const double tol = kDegeneracyTolerance * len * len;
  const double rmax2 = max_radius * max_radius;
  for (const Candidate& c : cand) {
    const double rho = poly.max_norm();
    const double d = std::sqrt(c.dist2);
    // No vertex can be closer in power to the candidate than to the cell's own generator.
    if (d > rho && (d - rho) * (d - rho) >= rho * rho - ri2 + rmax2) break;
    const double rj2 = pts[c.site.gid].radius * pts[c.site.gid].radius;
    if (!poly.clip(2.0 * c.offset, c.dist2 + ri2 - rj2, tol, c.site)) break;
  }
  return poly;
}

// Accumulates faces keyed by canonical site tuples across all cells.
struct LatticeBuilder {
  double len;
  std::array<std::map<Key, int>, 4> ids;
  std::array<std::vector<Face>, 4> faces;
  std::array<std::vector<int>, 4> seen;        // occurrences per face
  std::array<std::vector<int>, 4> expected;    // cell sites per face

  // Returns (id, translation, created).
  std::tuple<int, Shift, bool> lookup(int q, const Key& sites) {
    Canonical c = canonicalize(sites);
    auto [it, created] = ids[q].try_emplace(c.key, static_cast<int>(faces[q].size()));
    if (created) {
      Face f;
      for (const Site& s : c.key)
        if (!s.is_wall()) f.cells.push_back(FaceRef{s.gid, s.shift});
      faces[q].push_back(std::move(f));
      seen[q].push_back(0);
      expected[q].push_back(static_cast<int>(faces[q].back().cells.size()));
    }
    return {it->second, c.translation, created};
  }
};

}  // namespace

Tessellation::Tessellation(Window window, int dim, std::vector<MarkedPoint> generators, std::vector<bool> empty_cell,
                           std::array<std::vector<Face>, 4> faces)
    : window_(window), dim_(dim), generators_(std::move(generators)), empty_(std::move(empty_cell)),
      faces_(std::move(faces)) {
  if (empty_.size() != generators_.size()) empty_.resize(generators_.size(), false);
  for (int q = 0; q <= dim_; ++q) {
    for (auto& f : faces_[q]) f.cofaces.clear();
  }
  for (int q = 1; q <= dim_; ++q) {
    for (int id = 0; id < static_cast<int>(faces_[q].size()); ++id) {
      for (const FaceRef& b : faces_[q][id].boundary) {
        if (b.id < 0 || b.id >= static_cast<int>(faces_[q - 1].size()))
          throw InvariantError("face q=" + std::to_string(q) + " id=" + std::to_string(id) +
                               " references missing boundary face " + std::to_string(b.id));
        faces_[q - 1][b.id].cofaces.push_back(FaceRef{id, Shift(-b.shift)});
      }
    }
  }
  for (int q = 0; q <= dim_; ++q) {
    for (auto& f : faces_[q]) {
      f.owner = -1;
      Vec3 best;
      for (const FaceRef& c : f.cells) {
        if (c.id < 0 || c.id >= static_cast<int>(generators_.size()))
          throw InvariantError("face references missing generator " + std::to_string(c.id));
        const Vec3 p = center(c);
        if (f.owner < 0 || std::lexicographical_compare(p.data(), p.data() + 3, best.data(), best.data() + 3)) {
          f.owner = c.id;
          best = p;
        }
      }
      f.on_boundary = false;
      f.touches_boundary = false;
    }
  }
  if (!window_.periodic && dim_ >= 1) {
    for (auto& f : faces_[dim_ - 1]) f.on_boundary = f.cells.size() < 2;
    for (int q = dim_ - 1; q >= 1; --q) {
      for (const auto& f : faces_[q]) {
        if (!f.on_boundary) continue;
        for (const FaceRef& b : f.boundary) faces_[q - 1][b.id].on_boundary = true;
      }
    }
    for (int q = 0; q <= dim_; ++q) {
      for (auto& f : faces_[q]) {
        for (int v : f.vertices) {
          if (v < 0 || v >= static_cast<int>(faces_[0].size())) throw InvariantError("vertex id out of range");
          f.touches_boundary = f.touches_boundary || faces_[0][v].on_boundary;
        }
      }
    }
  }
}

long Tessellation::euler_characteristic() const {
  long chi = 0;
  for (int q = 0; q <= dim_; ++q) chi += (q % 2 == 0 ? 1 : -1) * static_cast<long>(faces_[q].size());
  return chi;
}

void Tessellation::validate() const {
  auto fail = [](int q, int id, const std::string& what) {
    throw InvariantError("face q=" + std::to_string(q) + " id=" + std::to_string(id) + ": " + what);
  };
  if (dim_ < 2 || dim_ > 3) throw InvariantError("dimension must be 2 or 3");
  const double len = window_.edge_length;
  const double tol = 1e-9 * len;
  for (int q = 0; q <= dim_; ++q) {
    for (int id = 0; id < static_cast<int>(faces_[q].size()); ++id) {
      const Face& f = faces_[q][id];
      if (f.vertices.empty()) fail(q, id, "no vertices");
      if (f.vertex_shift.size() != f.vertices.size() || f.coords.cols() != static_cast<Eigen::Index>(f.vertices.size()))
        fail(q, id, "vertex, shift and coordinate lists differ in length");
      if (f.cells.empty()) fail(q, id, "no incident cell");
      for (std::size_t k = 0; k < f.vertices.size(); ++k) {
        const int v = f.vertices[k];
        if (v < 0 || v >= static_cast<int>(faces_[0].size())) fail(q, id, "vertex id out of range");
        const Vec3 expect = faces_[0][v].coords.col(0) + len * f.vertex_shift[k].cast<double>();
        if ((expect - f.coords.col(static_cast<Eigen::Index>(k))).norm() > tol)
          fail(q, id, "coordinates disagree with vertex table");
      }
      if (q < dim_ && f.cofaces.empty()) fail(q, id, "not incident to any (q+1)-face");
      if (q == 0) {
        if (f.vertices.size() != 1 || f.vertices[0] != id) fail(q, id, "vertex must list itself");
        continue;
      }
      // Boundary closure: vertices of the boundary faces are exactly the face's vertices.
      std::set<std::tuple<int, int, int, int>> own, from_boundary;
      for (std::size_t k = 0; k < f.vertices.size(); ++k)
        own.insert({f.vertices[k], f.vertex_shift[k].x(), f.vertex_shift[k].y(), f.vertex_shift[k].z()});
      for (const FaceRef& b : f.boundary) {
        const Face& g = faces_[q - 1][b.id];
        for (std::size_t k = 0; k < g.vertices.size(); ++k) {
          const Shift s = g.vertex_shift[k] + b.shift;
          from_boundary.insert({g.vertices[k], s.x(), s.y(), s.z()});
        }
      }
      if (own != from_boundary) fail(q, id, "boundary faces do not close up on the face's vertices");
      if (q == 1 && f.boundary.size() != 2) fail(q, id, "edge must have two endpoints");
      if (q == 2) {
        if (f.boundary.size() != f.vertices.size() || f.vertices.size() < 3)
          fail(q, id, "polygon needs one boundary edge per vertex");
        const std::size_t k = f.vertices.size();
        for (std::size_t j = 0; j < k; ++j) {
          const Face& e = faces_[1][f.boundary[j].id];
          std::set<std::tuple<int, int, int, int>> ends, want;
          for (std::size_t m = 0; m < 2; ++m) {
            const Shift s = e.vertex_shift[m] + f.boundary[j].shift;
            ends.insert({e.vertices[m], s.x(), s.y(), s.z()});
          }
          for (std::size_t m : {j, (j + 1) % k})
            want.insert({f.vertices[m], f.vertex_shift[m].x(), f.vertex_shift[m].y(), f.vertex_shift[m].z()});
          if (ends != want) fail(q, id, "boundary edges are not in cyclic vertex order");
        }
      }
    }
  }
}

Tessellation build_laguerre(std::span<const MarkedPoint> points, const Window& window) {
  constexpr int kDim = 3;
  if (window.edge_length <= 0) throw DomainError("window edge length must be positive");
  // A torus tessellation needs p + 2 generators; a bounded window needs one.
  const std::size_t min_points = window.periodic ? kDim + 2 : 1;
  if (points.size() < min_points)
    throw EmptyInputError("build_laguerre: need at least " + std::to_string(min_points) + " generators, got " +
                          std::to_string(points.size()));
  const double len = window.edge_length;
  double max_radius = 0.0;
  for (const auto& p : points) {
    if (!(p.radius >= 0.0) || !std::isfinite(p.radius)) throw DomainError("radii must be finite and nonnegative");
    if (!p.location.allFinite() || (p.location.array() < 0.0).any() || (p.location.array() >= len).any())
      throw DomainError("generator outside the window [0, L)^3");
    max_radius = std::max(max_radius, p.radius);
  }

  const int n = static_cast<int>(points.size());
  std::vector<bool> empty(n, false);
  LatticeBuilder lb{len, {}, {}, {}, {}};

  for (int i = 0; i < n; ++i) {
    const CellPolytope poly = build_cell(i, points, window, max_radius);
    if (poly.empty()) {
      empty[i] = true;
      continue;
    }
    const Vec3 xi = points[i].location;
    const Site self{i, Shift::Zero()};
    const auto& pv = poly.vertices();

    std::set<std::pair<int, std::tuple<int, int, int, int>>> counted;
    auto count_once = [&](int q, int id, const Shift& t) {
      if (counted.insert({q, {id, t.x(), t.y(), t.z()}}).second) ++lb.seen[q][id];
    };

    std::vector<int> vid(pv.size());
    std::vector<Shift> vt(pv.size());
    for (std::size_t v = 0; v < pv.size(); ++v) {
      Key sites{self};
      for (int pl : pv[v].planes) sites.push_back(poly.label(pl));
      if (window.periodic) {
        for (const Site& s : sites)
          if (s.is_wall()) throw DegenerateInputError("periodic cell reaches the construction box");
      }
      auto [id, t, created] = lb.lookup(0, sites);
      if (created) {
        Face& f = lb.faces[0][id];
        f.vertices = {id};
        f.vertex_shift = {Shift::Zero()};
        f.coords = xi + pv[v].pos - len * t.cast<double>();
      }
      vid[v] = id;
      vt[v] = t;
      count_once(0, id, t);
    }

    Face cell;
    cell.vertices = vid;
    cell.vertex_shift = vt;
    cell.coords.resize(3, static_cast<Eigen::Index>(pv.size()));
    for (std::size_t v = 0; v < pv.size(); ++v) cell.coords.col(static_cast<Eigen::Index>(v)) = xi + pv[v].pos;

    for (const PolyFace& pf : poly.faces()) {
      const Site label = poly.label(pf.plane);
      auto [fid, tf, fcreated] = lb.lookup(2, Key{self, label});
      const std::size_t k = pf.cycle.size();
      std::vector<FaceRef> edges(k);
      for (std::size_t j = 0; j < k; ++j) {
        const int a = pf.cycle[j], b = pf.cycle[(j + 1) % k];
        int other = -1;
        for (int pa : pv[a].planes)
          for (int pb : pv[b].planes)
            if (pa == pb && pa != pf.plane) other = pa;
        if (other < 0) throw DegenerateInputError("generators not in general position: edge without second facet");
        auto [eid, te, ecreated] = lb.lookup(1, Key{self, label, poly.label(other)});
        if (ecreated) {
          Face& e = lb.faces[1][eid];
          e.vertices = {vid[a], vid[b]};
          e.vertex_shift = {Shift(vt[a] - te), Shift(vt[b] - te)};
          e.coords.resize(3, 2);
          e.coords.col(0) = xi + pv[a].pos - len * te.cast<double>();
          e.coords.col(1) = xi + pv[b].pos - len * te.cast<double>();
          e.boundary = {FaceRef{vid[a], Shift(vt[a] - te)}, FaceRef{vid[b], Shift(vt[b] - te)}};
        }
        count_once(1, eid, te);
        edges[j] = FaceRef{eid, Shift(te - tf)};
      }
      if (fcreated) {
        Face& f = lb.faces[2][fid];
        f.vertices.resize(k);
        f.vertex_shift.resize(k);
        f.coords.resize(3, static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) {
          const int v = pf.cycle[j];
          f.vertices[j] = vid[v];
          f.vertex_shift[j] = vt[v] - tf;
          f.coords.col(static_cast<Eigen::Index>(j)) = xi + pv[v].pos - len * tf.cast<double>();
        }
        f.boundary = edges;
      }
      count_once(2, fid, tf);
      cell.boundary.push_back(FaceRef{fid, tf});
    }
    cell.cells = {FaceRef{i, Shift::Zero()}};
    lb.faces[3].push_back(std::move(cell));
  }

  for (int q = 0; q < kDim; ++q) {
    for (std::size_t id = 0; id < lb.faces[q].size(); ++id) {
      if (lb.seen[q][id] != lb.expected[q][id])
        throw DegenerateInputError("generators not in general position: " + std::to_string(q) + "-face seen from " +
                                   std::to_string(lb.seen[q][id]) + " of " + std::to_string(lb.expected[q][id]) +
                                   " incident cells");
    }
  }
  std::vector<MarkedPoint> gens(points.begin(), points.end());
  return Tessellation(window, kDim, std::move(gens), std::move(empty), std::move(lb.faces));
}

Tessellation build_voronoi(std::span<const Vec3> locations, const Window& window) {
  std::vector<MarkedPoint> pts;
  pts.reserve(locations.size());
  for (const Vec3& x : locations) pts.push_back({x, 0.0});
  return build_laguerre(pts, window);
}

double face_area(const Tessellation& tess, int face_id) {
  return polygon_area<double>(tess.face(2, face_id).coords);
}

double face_inradius(const Tessellation& tess, int face_id, std::span<const double> edge_thickness) {
  const Face& f = tess.face(2, face_id);
  if (edge_thickness.empty()) return polygon_inradius<double>(f.coords);
  std::vector<double> rho(f.boundary.size());
  for (std::size_t j = 0; j < f.boundary.size(); ++j) {
    const int e = f.boundary[j].id;
    if (e >= static_cast<int>(edge_thickness.size())) throw DomainError("face_inradius: thickness table too short");
    rho[j] = edge_thickness[e];
    if (!(rho[j] >= 0.0)) throw DomainError("face_inradius: thickness must be nonnegative");
  }
  return polygon_inradius<double>(f.coords, rho);
}

double face_eccentricity(const Tessellation& tess, int q, int face_id) {
  const Face& f = tess.face(q, face_id);
  if (f.on_boundary || (q == tess.dim() - 1 && f.cells.size() < 2))
    throw DomainError("face_eccentricity: face lies in the window boundary");
  double best = 0.0;
  for (const FaceRef& c : f.cells) {
    const Vec3 p = tess.center(c);
    best = std::max(best, (f.coords.colwise() - p).colwise().norm().maxCoeff());
  }
  return best;
}

}  // namespace tessgof
