#include "tessgof/tessellation_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace tessgof {

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_refs(const std::vector<FaceRef>& refs) {
  std::string s;
  for (const FaceRef& r : refs) {
    if (!s.empty()) s += ' ';
    s += std::to_string(r.id);
    if (!r.shift.isZero())
      s += '@' + std::to_string(r.shift.x()) + ':' + std::to_string(r.shift.y()) + ':' + std::to_string(r.shift.z());
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next non-empty, comment-stripped line; false at end of input.
  bool next(std::string& line) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_no_;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      const std::string_view t = trim(raw);
      if (!t.empty()) {
        line.assign(t);
        return true;
      }
    }
    return false;
  }

  std::string expect(const std::string& section) {
    std::string line;
    if (!next(line)) throw ParseError("unexpected end of file: missing section '" + section + "'", line_no_);
    return line;
  }

  int line() const { return line_no_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_no_); }

  template <typename T>
  T number(std::string_view field, const char* name) const {
    field = trim(field);
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
      // from_chars for doubles is not available everywhere; strtod round-trips %.17g.
      std::string tmp(field);
      char* end = nullptr;
      value = std::strtod(tmp.c_str(), &end);
      if (tmp.empty() || end != tmp.c_str() + tmp.size()) fail(std::string("field '") + name + "': not a number");
    } else {
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size())
        fail(std::string("field '") + name + "': not an integer");
    }
    return value;
  }

  std::vector<FaceRef> refs(std::string_view field, const char* name) const {
    std::vector<FaceRef> out;
    for (std::string_view tok : split(trim(field), ' ')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      FaceRef r;
      const auto at = tok.find('@');
      r.id = number<int>(tok.substr(0, at), name);
      if (at != std::string_view::npos) {
        const auto parts = split(tok.substr(at + 1), ':');
        if (parts.size() != 3) fail(std::string("field '") + name + "': shift must be sx:sy:sz");
        for (int k = 0; k < 3; ++k) r.shift[k] = number<int>(parts[k], name);
      }
      out.push_back(r);
    }
    return out;
  }

  // Parses "<name>,<count>" and returns count.
  int header(const std::string& line, const std::string& name) const {
    const auto f = split(line, ',');
    if (f.size() != 2 || trim(f[0]) != name) fail("expected section '" + name + "', found '" + line + "'");
    const int n = number<int>(f[1], "count");
    if (n < 0) fail("negative count in section '" + name + "'");
    return n;
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

void write_tessellation(std::ostream& out, const Tessellation& tess) {
  const Window& w = tess.window();
  out << "# tessellation face lattice\n";
  out << "tessgof-tessellation,1\n";
  out << "window," << fmt_double(w.edge_length) << ',' << (w.periodic ? 1 : 0) << ',' << tess.dim() << '\n';
  out << "# id,x,y,z,radius,empty\n";
  out << "generators," << tess.generators().size() << '\n';
  for (std::size_t i = 0; i < tess.generators().size(); ++i) {
    const MarkedPoint& g = tess.generators()[i];
    out << i << ',' << fmt_double(g.location.x()) << ',' << fmt_double(g.location.y()) << ','
        << fmt_double(g.location.z()) << ',' << fmt_double(g.radius) << ',' << (tess.cell_is_empty(static_cast<int>(i)) ? 1 : 0)
        << '\n';
  }
  out << "# id,x,y,z\n";
  out << "vertices," << tess.count(0) << '\n';
  for (std::size_t v = 0; v < tess.count(0); ++v) {
    const auto c = tess.face(0, static_cast<int>(v)).coords.col(0);
    out << v << ',' << fmt_double(c.x()) << ',' << fmt_double(c.y()) << ',' << fmt_double(c.z()) << '\n';
  }
  out << "# id,vertices,boundary,cells\n";
  for (int q = 0; q <= tess.dim(); ++q) {
    out << "faces q=" << q << ',' << tess.count(q) << '\n';
    for (std::size_t id = 0; id < tess.count(q); ++id) {
      const Face& f = tess.face(q, static_cast<int>(id));
      std::vector<FaceRef> verts;
      for (std::size_t k = 0; k < f.vertices.size(); ++k) verts.push_back(FaceRef{f.vertices[k], f.vertex_shift[k]});
      out << id << ',' << fmt_refs(verts) << ',' << fmt_refs(f.boundary) << ',' << fmt_refs(f.cells) << '\n';
    }
  }
  out << "end\n";
}

void export_tessellation(const std::string& path, const Tessellation& tess) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_tessellation(out, tess);
  if (!out) throw Error("write to '" + path + "' failed");
}

Tessellation read_tessellation(std::istream& in) {
  Reader rd(in);
  std::string line = rd.expect("tessgof-tessellation");
  {
    const auto f = split(line, ',');
    if (f.size() != 2 || trim(f[0]) != "tessgof-tessellation") rd.fail("missing 'tessgof-tessellation' header");
    if (rd.number<int>(f[1], "version") != 1) rd.fail("unsupported format version");
  }
  Window w;
  int dim = 3;
  {
    line = rd.expect("window");
    const auto f = split(line, ',');
    if (f.size() != 4 || trim(f[0]) != "window") rd.fail("expected 'window,<edge>,<periodic>,<dim>'");
    w.edge_length = rd.number<double>(f[1], "edge length");
    if (!(w.edge_length > 0)) rd.fail("field 'edge length': must be positive");
    w.periodic = rd.number<int>(f[2], "periodic") != 0;
    dim = rd.number<int>(f[3], "dimension");
    if (dim < 2 || dim > 3) rd.fail("field 'dimension': must be 2 or 3");
  }

  const int ngen = rd.header(rd.expect("generators"), "generators");
  std::vector<MarkedPoint> gens(ngen);
  std::vector<bool> empty(ngen, false);
  for (int i = 0; i < ngen; ++i) {
    line = rd.expect("generators");
    const auto f = split(line, ',');
    if (f.size() != 6) rd.fail("generator record needs 6 fields: id,x,y,z,radius,empty");
    if (rd.number<int>(f[0], "id") != i) rd.fail("generator ids must be consecutive from 0");
    gens[i].location = Vec3(rd.number<double>(f[1], "x"), rd.number<double>(f[2], "y"), rd.number<double>(f[3], "z"));
    gens[i].radius = rd.number<double>(f[4], "radius");
    empty[i] = rd.number<int>(f[5], "empty") != 0;
  }

  const int nvert = rd.header(rd.expect("vertices"), "vertices");
  std::vector<Vec3> vcoords(nvert);
  for (int i = 0; i < nvert; ++i) {
    line = rd.expect("vertices");
    const auto f = split(line, ',');
    if (f.size() != 4) rd.fail("vertex record needs 4 fields: id,x,y,z");
    if (rd.number<int>(f[0], "id") != i) rd.fail("vertex ids must be consecutive from 0");
    vcoords[i] = Vec3(rd.number<double>(f[1], "x"), rd.number<double>(f[2], "y"), rd.number<double>(f[3], "z"));
  }

  std::array<std::vector<Face>, 4> faces;
  for (int q = 0; q <= dim; ++q) {
    const std::string name = "faces q=" + std::to_string(q);
    const int n = rd.header(rd.expect(name), name);
    faces[q].resize(n);
    for (int i = 0; i < n; ++i) {
      line = rd.expect(name);
      const auto f = split(line, ',');
      if (f.size() != 4) rd.fail("face record needs 4 fields: id,vertices,boundary,cells");
      if (rd.number<int>(f[0], "id") != i) rd.fail("face ids must be consecutive from 0");
      Face& face = faces[q][i];
      const auto verts = rd.refs(f[1], "vertices");
      face.boundary = rd.refs(f[2], "boundary");
      face.cells = rd.refs(f[3], "cells");
      face.coords.resize(3, static_cast<Eigen::Index>(verts.size()));
      for (std::size_t k = 0; k < verts.size(); ++k) {
        if (verts[k].id < 0 || verts[k].id >= nvert) rd.fail("field 'vertices': id out of range");
        face.vertices.push_back(verts[k].id);
        face.vertex_shift.push_back(verts[k].shift);
        face.coords.col(static_cast<Eigen::Index>(k)) =
            vcoords[verts[k].id] + w.edge_length * verts[k].shift.cast<double>();
      }
      if (q > 0 && face.boundary.empty()) rd.fail("field 'boundary': a " + std::to_string(q) + "-face needs boundary faces");
      for (const FaceRef& b : face.boundary) {
        if (q == 0 || b.id < 0 || b.id >= static_cast<int>(faces[q - 1].size()))
          rd.fail("field 'boundary': id out of range");
      }
      for (const FaceRef& c : face.cells) {
        if (c.id < 0 || c.id >= ngen) rd.fail("field 'cells': generator id out of range");
      }
    }
  }
  line = rd.expect("end");
  if (line != "end") rd.fail("expected 'end', found '" + line + "'");

  if (static_cast<int>(faces[0].size()) != nvert) throw ParseError("faces q=0 must list every vertex exactly once");
  Tessellation t(w, dim, std::move(gens), std::move(empty), std::move(faces));
  t.validate();
  return t;
}

Tessellation import_tessellation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_tessellation(in);
}

}  // namespace tessgof
