#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "verifem/fem.hpp"

namespace verifem {

struct VtkFields {
  std::vector<std::pair<std::string, std::vector<double>>> point_scalars;
  std::vector<std::pair<std::string, std::vector<double>>> cell_scalars;
  std::vector<std::pair<std::string, std::vector<Vec2>>> cell_vectors;
};

// Legacy ASCII unstructured grid of linear triangles (cell type 5).
void write_vtk(std::ostream& out, const Mesh& mesh, const VtkFields& fields, const std::string& title = "verifem");

}  // namespace verifem
