#ifndef TESSGOF_TESSELLATION_IO_HPP
#define TESSGOF_TESSELLATION_IO_HPP

#include <iosfwd>
#include <string>

#include "tessgof/geometry.hpp"

namespace tessgof {

/// Text face-lattice format, version 1. Comma-separated records, `#` starts a
/// comment, blank lines ignored:
///
///   tessgof-tessellation,1
///   window,<edge length>,<periodic 0|1>,<dimension>
///   generators,<count>
///   <id>,<x>,<y>,<z>,<radius>,<empty 0|1>
///   vertices,<count>
///   <id>,<x>,<y>,<z>
///   faces q=<k>,<count>          (one section for each k = 0..dimension)
///   <id>,<vertex refs>,<boundary refs>,<cell refs>
///   end
///
/// A ref list is space separated; each ref is `id` or `id@sx:sy:sz` where the
/// shift moves the referenced item's frame into the face frame (periodic
/// windows). 2-face vertices are listed in cyclic order with boundary[j] the
/// edge from vertex j to vertex j+1. Vertex coordinates are unwrapped.
void write_tessellation(std::ostream& out, const Tessellation& tess);
void export_tessellation(const std::string& path, const Tessellation& tess);

/// Parses and validates; ParseError carries the line, InvariantError the failed check.
Tessellation read_tessellation(std::istream& in);
Tessellation import_tessellation(const std::string& path);

}  // namespace tessgof

#endif  // TESSGOF_TESSELLATION_IO_HPP
