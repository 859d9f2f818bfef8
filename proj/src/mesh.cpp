#include "hhons/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hhons {

namespace {

double shoelace_area(const std::vector<Vector2>& pts)
{
  double twice = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vector2& a = pts[i];
    const Vector2& b = pts[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

Vector2 polygon_centroid(const std::vector<Vector2>& pts, double area)
{
  Vector2 c = Vector2::Zero();
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vector2& a = pts[i];
    const Vector2& b = pts[(i + 1) % n];
    const double cross = a.x() * b.y() - b.x() * a.y();
    c += cross * (a + b);
  }
  return c / (6.0 * area);
}

} // namespace

Mesh::Mesh(std::vector<Vector2> vertex_coords, std::vector<std::vector<int>> element_loops)
{
  vertices_.reserve(vertex_coords.size());
  for (int i = 0; i < static_cast<int>(vertex_coords.size()); ++i) {
    if (!vertex_coords[i].allFinite())
      throw StructureError("vertex " + std::to_string(i) + " has non-finite coordinates");
    vertices_.push_back(Vertex{i, vertex_coords[i]});
  }

  // Derive faces as the unique undirected edges of the element loops.
  std::map<std::pair<int, int>, int> edge_to_face;
  elements_.reserve(element_loops.size());
  for (int e = 0; e < static_cast<int>(element_loops.size()); ++e) {
    const std::vector<int>& loop = element_loops[e];
    if (loop.size() < 3)
      throw StructureError("element " + std::to_string(e) + " has fewer than 3 vertices");

    Element elem;
    elem.id = e;
    elem.vertex_ids = loop;

    std::vector<Vector2> pts;
    pts.reserve(loop.size());
    for (int v : loop) {
      if (v < 0 || v >= n_vertices())
        throw StructureError("element " + std::to_string(e) + " references unknown vertex " + std::to_string(v));
      pts.push_back(vertices_[v].coords);
    }

    elem.measure = shoelace_area(pts);
    if (elem.measure <= 0.0)
      throw StructureError("element " + std::to_string(e) + " is degenerate or not counter-clockwise (area " +
                           std::to_string(elem.measure) + ")");
    elem.barycenter = polygon_centroid(pts, elem.measure);

    elem.diameter = 0.0;
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        elem.diameter = std::max(elem.diameter, (pts[i] - pts[j]).norm());

    const int nv = static_cast<int>(loop.size());
    for (int i = 0; i < nv; ++i) {
      const int va = loop[i];
      const int vb = loop[(i + 1) % nv];
      const std::pair<int, int> key{std::min(va, vb), std::max(va, vb)};

      auto it = edge_to_face.find(key);
      int fid;
      if (it == edge_to_face.end()) {
        fid = static_cast<int>(faces_.size());
        edge_to_face.emplace(key, fid);
        Face f;
        f.id = fid;
        f.vertex_ids = {va, vb};
        const Vector2 a = vertices_[va].coords, b = vertices_[vb].coords;
        f.measure = (b - a).norm();
        if (f.measure <= 0.0)
          throw StructureError("zero-length face between vertices " + std::to_string(va) + " and " + std::to_string(vb));
        f.diameter = f.measure;
        f.midpoint = 0.5 * (a + b);
        faces_.push_back(f);
      } else {
        fid = it->second;
      }

      Face& f = faces_[fid];
      int slot;
      if (f.neighbors[0] < 0)
        slot = 0;
      else if (f.neighbors[1] < 0)
        slot = 1;
      else
        throw StructureError("face " + std::to_string(fid) + " is shared by more than two elements");
      f.neighbors[slot] = e;

      // Outward normal of edge va -> vb for a CCW loop: rotate the direction by -90 degrees.
      const Vector2 dir = (vertices_[vb].coords - vertices_[va].coords).normalized();
      f.normal[slot] = Vector2(dir.y(), -dir.x());

      elem.face_ids.push_back(fid);
    }

    elements_.push_back(std::move(elem));
  }

  for (const Face& f : faces_) {
    if (f.is_boundary())
      boundary_face_ids_.push_back(f.id);
    else
      interior_face_ids_.push_back(f.id);
  }

  for (const Element& e : elements_)
    h_ = std::max(h_, e.diameter);
}

int Mesh::locate(const Vector2& x) const
{
  // Linear scan with a point-in-polygon test; adequate at desk scale.
  const double tol = 1e-12 * std::max(1.0, h_);
  for (const Element& e : elements_) {
    bool inside = true;
    const int nv = static_cast<int>(e.vertex_ids.size());
    for (int i = 0; i < nv && inside; ++i) {
      const Vector2& a = vertices_[e.vertex_ids[i]].coords;
      const Vector2& b = vertices_[e.vertex_ids[(i + 1) % nv]].coords;
      const double cross = (b.x() - a.x()) * (x.y() - a.y()) - (b.y() - a.y()) * (x.x() - a.x());
      if (cross < -tol) inside = false;
    }
    if (inside) return e.id;
  }
  throw StructureError("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") is outside the mesh");
}

Mesh build_cartesian(int nx, int ny, const Box& domain)
{
  if (nx < 1 || ny < 1)
    throw InvalidParameter("build_cartesian: nx and ny must be >= 1");

  const double dx = (domain.hi.x() - domain.lo.x()) / nx;
  const double dy = (domain.hi.y() - domain.lo.y()) / ny;
  if (dx <= 0.0 || dy <= 0.0)
    throw InvalidParameter("build_cartesian: domain box is empty");

  std::vector<Vector2> coords;
  coords.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      coords.emplace_back(domain.lo.x() + i * dx, domain.lo.y() + j * dy);

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  std::vector<std::vector<int>> loops;
  loops.reserve(static_cast<size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      loops.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});

  return Mesh(std::move(coords), std::move(loops));
}

Mesh build_triangular(int n, double distortion)
{
  if (n < 1)
    throw InvalidParameter("build_triangular: n must be >= 1");
  if (distortion < 0.0 || distortion >= 1.0)
    throw InvalidParameter("build_triangular: distortion must lie in [0,1) (element inversion risk)");

  std::vector<Vector2> coords;
  coords.reserve(static_cast<size_t>(n + 1) * (n + 1));
  const double pi = std::acos(-1.0);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      Vector2 x(static_cast<double>(i) / n, static_cast<double>(j) / n);
      const bool interior = (i > 0 && i < n && j > 0 && j < n);
      if (interior && distortion > 0.0) {
        // Frequency (2n+1)pi so the displacement is nonzero at the interior
        // lattice points and vanishes on the boundary of the unit square.
        const double s = std::sin((2 * n + 1) * pi * x.x()) * std::sin((2 * n + 1) * pi * x.y());
        const double amp = distortion / (4.0 * n);
        x += amp * s * Vector2(1.0, 1.0);
      }
      coords.push_back(x);
    }
  }

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };

  std::vector<std::vector<int>> loops;
  loops.reserve(2u * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      loops.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      loops.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }

  return Mesh(std::move(coords), std::move(loops));
}

namespace {

std::string next_content_line(std::istream& in, int& line_no)
{
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto pos = line.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos) return line;
  }
  return {};
}

[[noreturn]] void parse_fail(int line_no, const std::string& why)
{
  throw ParseError("mesh parse error at line " + std::to_string(line_no) + ": " + why);
}

} // namespace

Mesh read_mesh(std::istream& in)
{
  int line_no = 0;

  std::string line = next_content_line(in, line_no);
  if (line.empty()) parse_fail(line_no, "empty file");
  {
    std::istringstream ls(line);
    std::string tag;
    int dim = 0;
    if (!(ls >> tag >> dim) || tag != "DIM") parse_fail(line_no, "expected 'DIM 2'");
    if (dim != 2) parse_fail(line_no, "only DIM 2 is supported");
  }

  line = next_content_line(in, line_no);
  int n_vertices = 0;
  {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag >> n_vertices) || tag != "VERTICES" || n_vertices <= 0)
      parse_fail(line_no, "expected 'VERTICES <count>'");
  }

  std::vector<Vector2> coords;
  coords.reserve(n_vertices);
  for (int i = 0; i < n_vertices; ++i) {
    line = next_content_line(in, line_no);
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y)) parse_fail(line_no, "expected two vertex coordinates");
    coords.emplace_back(x, y);
  }

  line = next_content_line(in, line_no);
  int n_elements = 0;
  {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag >> n_elements) || tag != "ELEMENTS" || n_elements <= 0)
      parse_fail(line_no, "expected 'ELEMENTS <count>'");
  }

  std::vector<std::vector<int>> loops;
  loops.reserve(n_elements);
  for (int e = 0; e < n_elements; ++e) {
    line = next_content_line(in, line_no);
    std::istringstream ls(line);
    int count = 0;
    if (!(ls >> count) || count < 3) parse_fail(line_no, "expected an element vertex count >= 3");
    std::vector<int> loop(count);
    for (int i = 0; i < count; ++i) {
      if (!(ls >> loop[i])) parse_fail(line_no, "expected " + std::to_string(count) + " vertex indices");
      if (loop[i] < 0 || loop[i] >= n_vertices) parse_fail(line_no, "vertex index out of range");
    }
    loops.push_back(std::move(loop));
  }

  return Mesh(std::move(coords), std::move(loops));
}

Mesh read_mesh(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out)
{
  out << "DIM 2\n";
  out << "VERTICES " << mesh.n_vertices() << "\n";
  out << std::setprecision(17);
  for (const Vertex& v : mesh.vertices())
    out << v.coords.x() << " " << v.coords.y() << "\n";
  out << "ELEMENTS " << mesh.n_elements() << "\n";
  for (const Element& e : mesh.elements()) {
    out << e.vertex_ids.size();
    for (int v : e.vertex_ids) out << " " << v;
    out << "\n";
  }
}

void write_mesh(const Mesh& mesh, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_mesh(mesh, out);
}

std::vector<Violation> validate(const Mesh& mesh)
{
  std::vector<Violation> out;

  for (const Vertex& v : mesh.vertices())
    if (!v.coords.allFinite())
      out.push_back({"vertex has non-finite coordinates", v.id, 0.0});

  for (const Face& f : mesh.faces()) {
    const int n_neighbors = (f.neighbors[0] >= 0 ? 1 : 0) + (f.neighbors[1] >= 0 ? 1 : 0);
    if (n_neighbors < 1 || n_neighbors > 2)
      out.push_back({"face has no adjacent element", f.id, static_cast<double>(n_neighbors)});

    for (int slot = 0; slot < n_neighbors; ++slot) {
      const double dev = std::abs(f.normal[slot].norm() - 1.0);
      if (dev > 1e-12)
        out.push_back({"face normal is not unit", f.id, dev});
    }
    if (n_neighbors == 2) {
      const double dev = (f.normal[0] + f.normal[1]).norm();
      if (dev > 1e-12)
        out.push_back({"interior-face normals are not opposite", f.id, dev});
    }
    if (f.is_boundary() != (n_neighbors == 1))
      out.push_back({"boundary flag inconsistent with neighbor count", f.id, 0.0});
    if (f.measure <= 0.0)
      out.push_back({"face has non-positive measure", f.id, f.measure});
  }

  double area_sum = 0.0;
  double boundary_area = 0.0;  // |Omega| recovered from the boundary flux of x/2
  for (const Element& e : mesh.elements()) {
    std::vector<Vector2> pts;
    for (int v : e.vertex_ids) pts.push_back(mesh.vertex(v).coords);
    const double area = shoelace_area(pts);
    if (e.measure <= 0.0 || std::abs(e.measure - area) > 1e-12 * std::max(1.0, std::abs(area)))
      out.push_back({"element measure disagrees with shoelace area", e.id, std::abs(e.measure - area)});
    area_sum += e.measure;

    Vector2 normal_sum = Vector2::Zero();
    for (int fid : e.face_ids) {
      const Face& f = mesh.face(fid);
      if (f.diameter > e.diameter + 1e-12 * e.diameter)
        out.push_back({"face diameter exceeds element diameter", fid, f.diameter - e.diameter});
      normal_sum += f.measure * f.normal_from(e.id);
    }
    if (normal_sum.norm() > 1e-12 * e.diameter)
      out.push_back({"element face normals do not close (divergence theorem)", e.id, normal_sum.norm()});
  }

  for (int fid : mesh.boundary_face_ids()) {
    const Face& f = mesh.face(fid);
    boundary_area += 0.5 * f.measure * f.midpoint.dot(f.normal[0]);
  }
  if (std::abs(area_sum - boundary_area) > 1e-12 * std::max(1.0, area_sum))
    out.push_back({"sum of element areas disagrees with domain area", -1, std::abs(area_sum - boundary_area)});

  return out;
}

} // namespace hhons
