#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "salforge/geometry.hpp"

namespace salforge::geom {

// OBJ (ascii) or PLY (ascii / binary little-endian), dispatched by extension.
// Polygons are fan-triangulated; vertex order is preserved. A vertex-only file
// loads as a soup with zero triangles (point-cloud input).
TriangleSoup load_mesh(const std::filesystem::path& path);

// Writers emit triangles only. `comments` go into the header ('#' lines for
// OBJ, 'comment' lines for PLY). OBJ prints coordinates with enough digits to
// round-trip doubles exactly.
void save_obj(const std::filesystem::path& path, const TriangleSoup& soup,
              const std::vector<std::string>& comments = {});
void save_ply(const std::filesystem::path& path, const TriangleSoup& soup, bool binary = false,
              const std::vector<std::string>& comments = {});

}  // namespace salforge::geom
