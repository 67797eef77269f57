#pragma once
// Nested dyadic triangulations of the unit square.
//
// Level j splits (0,1)^2 into 2^j x 2^j cells; every cell is cut along its
// bottom-left -> top-right diagonal, giving 2*4^j congruent right triangles
// (one congruence class up to reflection) of signed area 2^{-2j-1}.  Meshes
// at different levels are nested: each triangle at level j is the union of
// four triangles at level j+1.  This file also provides point location,
// ancestor lookup between levels, exact prolongation of P1/P2 fields, and the
// vertex-adjacency patches used for corrector localization.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gllod {

using Complex = std::complex<double>;
using VecXd = Eigen::VectorXd;
using VecXc = Eigen::VectorXcd;
using SpMatD = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<Complex>;

enum class BoundaryTag : std::uint8_t {
  interior = 0,
  edge_x1 = 1,  // on a face with x1 in {0,1}: normal is +-e1
  edge_x2 = 2,  // on a face with x2 in {0,1}: normal is +-e2
  corner = 3,
};

struct DyadicMesh {
  int level = 0;
  int n = 0;  // cells per side = 2^level

  // Explicit node/triangle/tag arrays (kept alongside the implicit structure).
  std::vector<Eigen::Vector2d> nodes;          // (n+1)^2 grid, x fastest
  std::vector<std::array<int, 3>> triangles;   // cell c: lower=2c, upper=2c+1
  std::vector<BoundaryTag> tags;

  int num_nodes() const { return int(nodes.size()); }
  int num_tris() const { return int(triangles.size()); }
  double h() const { return 1.0 / double(n); }
  double tri_area() const { return 0.5 * h() * h(); }

  int node_index(int ix, int iy) const { return iy * (n + 1) + ix; }
  int tri_cell(int t) const { return t >> 1; }
  bool tri_is_upper(int t) const { return (t & 1) != 0; }
  int cell_x(int c) const { return c % n; }
  int cell_y(int c) const { return c / n; }

  // P1 hat gradients are constant per congruence class (lower/upper), scaled
  // by 1/h.  grad[class][local vertex] = (gx, gy) * n.
  // lower (v00,v10,v11): lam = (1 - x/h, (x-y)/h, y/h)
  // upper (v00,v11,v01): lam = (1 - y/h, x/h, (y-x)/h)
  std::array<Eigen::Vector2d, 3> hat_gradients(bool upper) const {
    double s = double(n);
    if (!upper)
      return {Eigen::Vector2d(-s, 0), Eigen::Vector2d(s, -s), Eigen::Vector2d(0, s)};
    return {Eigen::Vector2d(0, -s), Eigen::Vector2d(s, 0), Eigen::Vector2d(-s, s)};
  }

  // Point location: cell + side of the diagonal; ties go to the lower
  // triangle (values agree on the shared edge by continuity).
  struct Located {
    int tri;
    std::array<double, 3> lam;  // barycentric wrt the triangle's vertex order
  };
  Located locate(double x, double y) const;

  // Barycentric coordinates of a point inside a given triangle.
  std::array<double, 3> barycentric(int tri, double x, double y) const;

  // The triangle of a coarser nested mesh containing triangle t of this mesh.
  int ancestor_tri(int t, int coarse_level) const;

  // Node -> incident triangle lists (filled by build_mesh).
  const std::vector<std::vector<int>>& node_to_tris() const { return node_tris_; }

  std::vector<std::vector<int>> node_tris_;
};

// Build the level-j mesh.  Throws std::invalid_argument outside 1 <= j <= 12.
DyadicMesh build_mesh(int level);

// ---------------------------------------------------------------------------
// Patches

struct Patch {
  int center = -1;  // coarse node index
  int layers = 0;
  std::vector<int> coarse_elements;    // patch region as coarse triangles (sorted)
  std::vector<int> elements;           // fine triangles covered by the region (sorted)
  std::vector<int> nodes;              // fine nodes of those triangles (sorted)
  std::vector<std::uint8_t> node_is_interior;  // parallel to nodes: 1 = free,
                                               // 0 = on the patch boundary (not on domain boundary)
  bool covers_all = false;             // patch equals the whole fine mesh
};

// Layer 0 is the support of the coarse hat at center_node; each layer adds the
// coarse triangles sharing a vertex with the current region.  Fine elements
// are the fine triangles contained in the region; a fine node is interior when
// every fine triangle incident to it belongs to the patch (nodes on the domain
// boundary keep the natural condition).
Patch expand_patch(const DyadicMesh& coarse, const DyadicMesh& fine, int center_node, int layers);

// ---------------------------------------------------------------------------
// Prolongation (exact: meshes are nested and fields piecewise polynomial)

enum class SpaceKind { scalar_p1, vector_p1, vector_p2 };

// Scalar P1: nodal complex coefficients -> nodal coefficients on fine_level.
VecXc prolongate_scalar(const VecXc& coarse, int coarse_level, int fine_level);

// Vector P1/P2: full per-Lagrange-node pairs (2 doubles per node, node-major)
// -> same layout on fine_level with degree fine_degree >= coarse degree.
VecXd prolongate_vector(const VecXd& coarse_full, int coarse_level, int coarse_degree,
                        int fine_level, int fine_degree);

// Sparse coarse-to-fine P1 inclusion (column z = fine coefficients of the
// coarse hat at z); the identity when levels match.
SpMatD scalar_p1_prolongation_matrix(int coarse_level, int fine_level);

// Pointwise evaluation of P1/P2 fields (used for prolongation and testing).
Complex eval_scalar_p1(const DyadicMesh& mesh, const VecXc& coeffs, double x, double y);
Eigen::Vector2d eval_vector(const DyadicMesh& mesh, int degree, const VecXd& full, double x,
                            double y);

// P2 Lagrange nodes of a triangle as level-(j+1) grid indices, in the order
// v0, v1, v2, m01, m12, m20 (vertices then opposite-free edge midpoints).
std::array<int, 6> p2_lagrange_nodes(const DyadicMesh& mesh, int tri);

// P2 basis values at barycentric lam, same ordering.
void p2_basis_values(const std::array<double, 3>& lam, double out[6]);

// P2 basis gradients at lam, given the triangle's hat gradients.
void p2_basis_grads(const std::array<double, 3>& lam, const std::array<Eigen::Vector2d, 3>& hatg,
                    Eigen::Vector2d out[6]);

}  // namespace gllod
