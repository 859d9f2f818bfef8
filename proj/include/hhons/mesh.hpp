// 2D polytopal meshes with the element/face connectivity used by the HHO operators:
// Cartesian quad grids, (optionally distorted) structured triangulations, and
// polygonal meshes read from text files.

#ifndef HHONS_MESH_HPP
#define HHONS_MESH_HPP

#include "hhons/common.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace hhons {

struct Vertex {
  int id;
  Vector2 coords;
};

/// A straight face (edge) of the mesh. Normals are stored per adjacent element,
/// so n_TF is looked up by element id and no global orientation is needed.
struct Face {
  int id;
  std::array<int, 2> vertex_ids;
  double measure;   // length
  double diameter;  // h_F (= measure for a segment)
  Vector2 midpoint;
  std::array<int, 2> neighbors{-1, -1};  // element ids; neighbors[1] < 0 on the boundary
  std::array<Vector2, 2> normal;         // outward unit normal n_TF per neighbor slot

  bool is_boundary() const { return neighbors[1] < 0; }

  int slot_of(int element_id) const
  {
    if (neighbors[0] == element_id) return 0;
    if (neighbors[1] == element_id) return 1;
    throw StructureError("face " + std::to_string(id) + " is not adjacent to element " + std::to_string(element_id));
  }

  const Vector2& normal_from(int element_id) const { return normal[slot_of(element_id)]; }
};

struct Element {
  int id;
  std::vector<int> vertex_ids;  // counter-clockwise polygon loop
  std::vector<int> face_ids;    // aligned with the loop: face i joins vertex i to vertex i+1
  double measure;               // |T| (shoelace area)
  double diameter;              // h_T (max pairwise vertex distance)
  Vector2 barycenter;           // area centroid x_T
};

/// Immutable after construction; safe to share read-only across workers.
class Mesh {
public:
  /// Builds connectivity from a vertex list and per-element CCW vertex loops.
  Mesh(std::vector<Vector2> vertex_coords, std::vector<std::vector<int>> element_loops);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Element>& elements() const { return elements_; }

  const Vertex& vertex(int i) const { return vertices_[i]; }
  const Face& face(int i) const { return faces_[i]; }
  const Element& element(int i) const { return elements_[i]; }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_faces() const { return static_cast<int>(faces_.size()); }
  int n_elements() const { return static_cast<int>(elements_.size()); }

  double h() const { return h_; }

  const std::vector<int>& boundary_face_ids() const { return boundary_face_ids_; }
  const std::vector<int>& interior_face_ids() const { return interior_face_ids_; }

  /// Index of the element whose closure contains x; ties (points on a shared
  /// face) resolve to the lowest element id. Throws if x is outside the mesh.
  int locate(const Vector2& x) const;

private:
  std::vector<Vertex> vertices_;
  std::vector<Face> faces_;
  std::vector<Element> elements_;
  std::vector<int> boundary_face_ids_;
  std::vector<int> interior_face_ids_;
  double h_ = 0.0;
};

struct Box {
  Vector2 lo{0.0, 0.0};
  Vector2 hi{1.0, 1.0};
};

/// nx-by-ny grid of quadrilateral elements on an axis-aligned box.
Mesh build_cartesian(int nx, int ny, const Box& domain = {});

/// Structured triangulation of the unit square: n-by-n cells split along the
/// main diagonal (2n^2 triangles). Interior vertices are displaced by a
/// deterministic sinusoidal map of amplitude distortion/(4n); boundary
/// vertices stay fixed. distortion must lie in [0,1).
Mesh build_triangular(int n, double distortion = 0.0);

/// Reads the polygonal text format (header `DIM 2`, then `VERTICES n` and
/// `ELEMENTS m` sections; element lines are `count v1 ... vcount`, 0-based, CCW).
Mesh read_mesh(const std::string& path);
Mesh read_mesh(std::istream& in);

void write_mesh(const Mesh& mesh, const std::string& path);
void write_mesh(const Mesh& mesh, std::ostream& out);

/// One violated mesh invariant; violations are data, not errors.
struct Violation {
  std::string description;
  int entity_id;     // element or face id, -1 for global checks
  double magnitude;  // size of the violation
};

/// Empty iff all mesh invariants hold (measures, normals, adjacency,
/// per-element divergence-theorem closure, global area consistency).
std::vector<Violation> validate(const Mesh& mesh);

} // namespace hhons

#endif
