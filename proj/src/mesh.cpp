#include "gllod/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gllod {

DyadicMesh build_mesh(int level) {
  if (level < 1 || level > 12)
    throw std::invalid_argument("mesh level must be in [1,12], got " + std::to_string(level));
  DyadicMesh m;
  m.level = level;
  m.n = 1 << level;
  const int np = m.n + 1;
  const double h = 1.0 / double(m.n);

  m.nodes.resize(std::size_t(np) * np);
  m.tags.resize(std::size_t(np) * np);
  for (int iy = 0; iy < np; ++iy) {
    for (int ix = 0; ix < np; ++ix) {
      int id = iy * np + ix;
      m.nodes[id] = Eigen::Vector2d(ix * h, iy * h);
      bool bx = (ix == 0 || ix == m.n);
      bool by = (iy == 0 || iy == m.n);
      m.tags[id] = bx && by  ? BoundaryTag::corner
                   : bx      ? BoundaryTag::edge_x1
                   : by      ? BoundaryTag::edge_x2
                             : BoundaryTag::interior;
    }
  }

  m.triangles.resize(std::size_t(2) * m.n * m.n);
  for (int cy = 0; cy < m.n; ++cy) {
    for (int cx = 0; cx < m.n; ++cx) {
      int c = cy * m.n + cx;
      int v00 = m.node_index(cx, cy);
      int v10 = m.node_index(cx + 1, cy);
      int v01 = m.node_index(cx, cy + 1);
      int v11 = m.node_index(cx + 1, cy + 1);
      m.triangles[2 * c] = {v00, v10, v11};      // lower: below the diagonal
      m.triangles[2 * c + 1] = {v00, v11, v01};  // upper
    }
  }

  m.node_tris_.resize(m.nodes.size());
  for (int t = 0; t < m.num_tris(); ++t)
    for (int v : m.triangles[t]) m.node_tris_[v].push_back(t);
  return m;
}

DyadicMesh::Located DyadicMesh::locate(double x, double y) const {
  x = std::min(std::max(x, 0.0), 1.0);
  y = std::min(std::max(y, 0.0), 1.0);
  double sx = x * n, sy = y * n;
  int cx = std::min(int(sx), n - 1);
  int cy = std::min(int(sy), n - 1);
  double lx = sx - cx;  // local cell coordinates in [0,1], exact for dyadic x
  double ly = sy - cy;
  int c = cy * n + cx;
  Located loc;
  if (ly <= lx) {  // lower triangle (ties on the diagonal are continuous)
    loc.tri = 2 * c;
    loc.lam = {1.0 - lx, lx - ly, ly};
  } else {
    loc.tri = 2 * c + 1;
    loc.lam = {1.0 - ly, lx, ly - lx};
  }
  return loc;
}

std::array<double, 3> DyadicMesh::barycentric(int tri, double x, double y) const {
  int c = tri_cell(tri);
  double lx = x * n - cell_x(c);
  double ly = y * n - cell_y(c);
  if (!tri_is_upper(tri)) return {1.0 - lx, lx - ly, ly};
  return {1.0 - ly, lx, ly - lx};
}

int DyadicMesh::ancestor_tri(int t, int coarse_level) const {
  int d = level - coarse_level;
  if (d < 0) throw std::invalid_argument("ancestor_tri: coarse level above fine level");
  if (d == 0) return t;
  int c = tri_cell(t);
  int cx = cell_x(c), cy = cell_y(c);
  int mask = (1 << d) - 1;
  int sx = cx & mask, sy = cy & mask;  // position within the ancestor cell
  // The ancestor cell's diagonal is y = x in subcell units; a lower fine
  // triangle of subcell (sx,sy) lies below it iff sy <= sx, an upper one iff
  // sy < sx (nestedness: no fine triangle straddles the diagonal).
  bool fine_upper = tri_is_upper(t);
  bool anc_lower = fine_upper ? (sy < sx) : (sy <= sx);
  int nc = 1 << coarse_level;
  int anc_cell = (cy >> d) * nc + (cx >> d);
  return 2 * anc_cell + (anc_lower ? 0 : 1);
}

// ---------------------------------------------------------------------------
// Patches

Patch expand_patch(const DyadicMesh& coarse, const DyadicMesh& fine, int center_node, int layers) {
  if (center_node < 0 || center_node >= coarse.num_nodes())
    throw std::invalid_argument("expand_patch: invalid center node index");
  if (coarse.level > fine.level)
    throw std::invalid_argument("expand_patch: coarse level above fine level");

  const auto& c_n2t = coarse.node_to_tris();
  std::vector<std::uint8_t> in_region(coarse.num_tris(), 0);
  std::vector<int> region = c_n2t[center_node];  // hat support
  for (int t : region) in_region[t] = 1;

  for (int l = 0; l < layers && int(region.size()) < coarse.num_tris(); ++l) {
    // Collect the vertex set of the current region, then add every coarse
    // triangle incident to one of those vertices.
    std::vector<std::uint8_t> node_mark(coarse.num_nodes(), 0);
    for (int t : region)
      for (int v : coarse.triangles[t]) node_mark[v] = 1;
    std::vector<int> grown = region;
    for (int v = 0; v < coarse.num_nodes(); ++v) {
      if (!node_mark[v]) continue;
      for (int t : c_n2t[v])
        if (!in_region[t]) {
          in_region[t] = 1;
          grown.push_back(t);
        }
    }
    region.swap(grown);
  }
  std::sort(region.begin(), region.end());

  Patch p;
  p.center = center_node;
  p.layers = layers;
  p.coarse_elements = region;

  const int d = fine.level - coarse.level;
  if (d == 0) {
    p.elements = region;
  } else {
    // Enumerate the 4^d fine triangles inside each coarse triangle directly.
    const int sub = 1 << d;
    p.elements.reserve(region.size() << (2 * d));
    for (int T : region) {
      int cc = coarse.tri_cell(T);
      bool upper = coarse.tri_is_upper(T);
      int bx = coarse.cell_x(cc) << d, by = coarse.cell_y(cc) << d;
      for (int sy = 0; sy < sub; ++sy) {
        for (int sx = 0; sx < sub; ++sx) {
          int fc = (by + sy) * fine.n + (bx + sx);
          if (!upper) {
            if (sy <= sx) p.elements.push_back(2 * fc);
            if (sy < sx) p.elements.push_back(2 * fc + 1);
          } else {
            if (sy > sx) p.elements.push_back(2 * fc);
            if (sy >= sx) p.elements.push_back(2 * fc + 1);
          }
        }
      }
    }
    std::sort(p.elements.begin(), p.elements.end());
  }
  p.covers_all = int(p.elements.size()) == fine.num_tris();

  std::vector<std::uint8_t> in_patch(fine.num_tris(), 0);
  for (int t : p.elements) in_patch[t] = 1;
  std::vector<std::uint8_t> node_seen(fine.num_nodes(), 0);
  for (int t : p.elements)
    for (int v : fine.triangles[t])
      node_seen[v] = 1;
  const auto& f_n2t = fine.node_to_tris();
  for (int v = 0; v < fine.num_nodes(); ++v) {
    if (!node_seen[v]) continue;
    p.nodes.push_back(v);
    bool interior = true;
    for (int t : f_n2t[v])
      if (!in_patch[t]) {
        interior = false;
        break;
      }
    p.node_is_interior.push_back(interior ? 1 : 0);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Evaluation and prolongation

Complex eval_scalar_p1(const DyadicMesh& mesh, const VecXc& coeffs, double x, double y) {
  auto loc = mesh.locate(x, y);
  const auto& tri = mesh.triangles[loc.tri];
  Complex v = 0;
  for (int a = 0; a < 3; ++a)
    if (loc.lam[a] != 0.0) v += loc.lam[a] * coeffs[tri[a]];
  return v;
}

std::array<int, 6> p2_lagrange_nodes(const DyadicMesh& mesh, int tri) {
  const auto& tv = mesh.triangles[tri];
  const int np = mesh.n + 1;
  const int np2 = 2 * mesh.n + 1;
  std::array<int, 6> out;
  int gx[3], gy[3];
  for (int a = 0; a < 3; ++a) {
    gx[a] = 2 * (tv[a] % np);
    gy[a] = 2 * (tv[a] / np);
  }
  for (int a = 0; a < 3; ++a) out[a] = gy[a] * np2 + gx[a];
  const int ea[3] = {0, 1, 2}, eb[3] = {1, 2, 0};
  for (int e = 0; e < 3; ++e) {
    int mx = (gx[ea[e]] + gx[eb[e]]) / 2;
    int my = (gy[ea[e]] + gy[eb[e]]) / 2;
    out[3 + e] = my * np2 + mx;
  }
  return out;
}

void p2_basis_values(const std::array<double, 3>& lam, double out[6]) {
  out[0] = lam[0] * (2 * lam[0] - 1);
  out[1] = lam[1] * (2 * lam[1] - 1);
  out[2] = lam[2] * (2 * lam[2] - 1);
  out[3] = 4 * lam[0] * lam[1];
  out[4] = 4 * lam[1] * lam[2];
  out[5] = 4 * lam[2] * lam[0];
}

void p2_basis_grads(const std::array<double, 3>& lam, const std::array<Eigen::Vector2d, 3>& hatg,
                    Eigen::Vector2d out[6]) {
  for (int a = 0; a < 3; ++a) out[a] = (4 * lam[a] - 1) * hatg[a];
  out[3] = 4 * (lam[0] * hatg[1] + lam[1] * hatg[0]);
  out[4] = 4 * (lam[1] * hatg[2] + lam[2] * hatg[1]);
  out[5] = 4 * (lam[2] * hatg[0] + lam[0] * hatg[2]);
}

Eigen::Vector2d eval_vector(const DyadicMesh& mesh, int degree, const VecXd& full, double x,
                            double y) {
  auto loc = mesh.locate(x, y);
  Eigen::Vector2d v(0, 0);
  if (degree == 1) {
    const auto& tri = mesh.triangles[loc.tri];
    for (int a = 0; a < 3; ++a) {
      if (loc.lam[a] == 0.0) continue;
      v[0] += loc.lam[a] * full[2 * tri[a]];
      v[1] += loc.lam[a] * full[2 * tri[a] + 1];
    }
  } else {
    double phi[6];
    auto ln = p2_lagrange_nodes(mesh, loc.tri);
    p2_basis_values(loc.lam, phi);
    for (int a = 0; a < 6; ++a) {
      if (phi[a] == 0.0) continue;
      v[0] += phi[a] * full[2 * ln[a]];
      v[1] += phi[a] * full[2 * ln[a] + 1];
    }
  }
  return v;
}

VecXc prolongate_scalar(const VecXc& coarse, int coarse_level, int fine_level) {
  if (fine_level < coarse_level)
    throw std::invalid_argument("prolongate_scalar: fine level below source level");
  DyadicMesh cm = build_mesh(coarse_level);
  if (coarse.size() != cm.num_nodes())
    throw std::invalid_argument("prolongate_scalar: coefficient size mismatch");
  if (fine_level == coarse_level) return coarse;
  DyadicMesh fm = build_mesh(fine_level);
  VecXc out(fm.num_nodes());
  for (int i = 0; i < fm.num_nodes(); ++i)
    out[i] = eval_scalar_p1(cm, coarse, fm.nodes[i][0], fm.nodes[i][1]);
  return out;
}

VecXd prolongate_vector(const VecXd& coarse_full, int coarse_level, int coarse_degree,
                        int fine_level, int fine_degree) {
  if (fine_level < coarse_level || fine_degree < coarse_degree)
    throw std::invalid_argument("prolongate_vector: target space does not contain the source");
  if (fine_level == coarse_level && fine_degree == coarse_degree) return coarse_full;
  DyadicMesh cm = build_mesh(coarse_level);
  const int lagrange_level = fine_level + (fine_degree == 2 ? 1 : 0);
  DyadicMesh lg = build_mesh(lagrange_level);  // Lagrange nodes of the target space
  VecXd out(2 * lg.num_nodes());
  for (int i = 0; i < lg.num_nodes(); ++i) {
    Eigen::Vector2d v = eval_vector(cm, coarse_degree, coarse_full, lg.nodes[i][0], lg.nodes[i][1]);
    out[2 * i] = v[0];
    out[2 * i + 1] = v[1];
  }
  return out;
}

SpMatD scalar_p1_prolongation_matrix(int coarse_level, int fine_level) {
  DyadicMesh cm = build_mesh(coarse_level);
  DyadicMesh fm = build_mesh(fine_level);
  SpMatD P(fm.num_nodes(), cm.num_nodes());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(fm.num_nodes()) * 3);
  for (int i = 0; i < fm.num_nodes(); ++i) {
    auto loc = cm.locate(fm.nodes[i][0], fm.nodes[i][1]);
    const auto& tri = cm.triangles[loc.tri];
    for (int a = 0; a < 3; ++a)
      if (loc.lam[a] != 0.0) trips.emplace_back(i, tri[a], loc.lam[a]);
  }
  P.setFromTriplets(trips.begin(), trips.end());
  P.makeCompressed();
  return P;
}

}  // namespace gllod
