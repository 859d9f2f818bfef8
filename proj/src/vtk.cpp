#include "hhons/vtk.hpp"

#include <fstream>
#include <iomanip>

namespace hhons {

void write_vtk(std::ostream& out, const VelocitySpace& space, const HybridVelocity& u,
               const BrokenPressure& p, const std::string& title)
{
  const Mesh& mesh = space.mesh();
  out << "# vtk DataFile Version 3.0\n";
  out << title << "\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << mesh.n_vertices() << " double\n";
  out << std::setprecision(12);
  for (const Vertex& v : mesh.vertices())
    out << v.coords.x() << " " << v.coords.y() << " 0\n";

  int list_size = 0;
  for (const Element& e : mesh.elements())
    list_size += 1 + static_cast<int>(e.vertex_ids.size());
  out << "CELLS " << mesh.n_elements() << " " << list_size << "\n";
  for (const Element& e : mesh.elements()) {
    out << e.vertex_ids.size();
    for (int v : e.vertex_ids) out << " " << v;
    out << "\n";
  }
  out << "CELL_TYPES " << mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e)
    out << 7 << "\n";  // VTK_POLYGON

  out << "CELL_DATA " << mesh.n_elements() << "\n";
  out << "VECTORS velocity double\n";
  const int Nk = space.n_cell_scalar();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    Vector2 avg = Vector2::Zero();
    for (int q = 0; q < tab.quad.size(); ++q)
      for (int i = 0; i < 2; ++i)
        avg[i] += tab.quad.weights[q] *
                  tab.phi.col(q).dot(u.coeffs.segment(space.cell_offset(e) + i * Nk, Nk));
    avg /= mesh.element(e).measure;
    out << avg.x() << " " << avg.y() << " 0\n";
  }
  out << "SCALARS pressure double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    const double avg =
        tab.mean_row_k.dot(p.coeffs.segment(space.pressure_offset(e), space.pressure_block())) /
        mesh.element(e).measure;
    out << avg << "\n";
  }
}

void write_vtk(const std::string& path, const VelocitySpace& space, const HybridVelocity& u,
               const BrokenPressure& p, const std::string& title)
{
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_vtk(out, space, u, p, title);
}

} // namespace hhons
