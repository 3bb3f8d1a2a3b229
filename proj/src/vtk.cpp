#include "verifem/vtk.hpp"

#include <cstdio>
#include <stdexcept>

namespace verifem {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string field_name(const std::string& name) {
  std::string s = name;
  for (char& c : s)
    if (c == ' ' || c == '\t') c = '_';
  if (s.empty()) throw std::invalid_argument("empty field name");
  return s;
}

}  // namespace

void write_vtk(std::ostream& out, const Mesh& mesh, const VtkFields& fields, const std::string& title) {
  const int nv = mesh.num_vertices(), nt = mesh.num_elements();
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (int i = 0; i < nv; ++i) out << num(mesh.vertex(i).x()) << ' ' << num(mesh.vertex(i).y()) << " 0\n";
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (int K = 0; K < nt; ++K) {
    const auto& t = mesh.triangle(K);
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  out << "CELL_TYPES " << nt << '\n';
  for (int K = 0; K < nt; ++K) out << "5\n";
  if (!fields.point_scalars.empty()) {
    out << "POINT_DATA " << nv << '\n';
    for (const auto& [name, v] : fields.point_scalars) {
      if (static_cast<int>(v.size()) != nv) throw std::invalid_argument("point field size mismatch: " + name);
      out << "SCALARS " << field_name(name) << " double 1\nLOOKUP_TABLE default\n";
      for (double x : v) out << num(x) << '\n';
    }
  }
  if (!fields.cell_scalars.empty() || !fields.cell_vectors.empty()) {
    out << "CELL_DATA " << nt << '\n';
    for (const auto& [name, v] : fields.cell_scalars) {
      if (static_cast<int>(v.size()) != nt) throw std::invalid_argument("cell field size mismatch: " + name);
      out << "SCALARS " << field_name(name) << " double 1\nLOOKUP_TABLE default\n";
      for (double x : v) out << num(x) << '\n';
    }
    for (const auto& [name, v] : fields.cell_vectors) {
      if (static_cast<int>(v.size()) != nt) throw std::invalid_argument("cell field size mismatch: " + name);
      out << "VECTORS " << field_name(name) << " double\n";
      for (const Vec2& x : v) out << num(x.x()) << ' ' << num(x.y()) << " 0\n";
    }
  }
}

}  // namespace verifem
