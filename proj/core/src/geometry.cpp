#include "sselab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sselab {

std::array<double, 2> Domain::squared_distance_range() const {
  double near = 0.0;
  double far = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double lo = lower[a] - x0[a];
    const double hi = upper[a] - x0[a];
    const double clamped = std::clamp(0.0, lo, hi);
    near += clamped * clamped;
    far += std::max(lo * lo, hi * hi);
  }
  return {near, far};
}

double Domain::observer_distance() const {
  const double outside = std::sqrt(squared_distance_range()[0]);
  if (outside > 0.0) return outside;
  double depth = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim; ++a)
    depth = std::min({depth, x0[a] - lower[a], upper[a] - x0[a]});
  return -depth;
}

Mesh::Mesh(const Domain& domain, std::array<int, 2> n) : domain_(domain), n_(n) {
  if (domain.dim != 1 && domain.dim != 2)
    throw std::invalid_argument("domain dim must be 1 or 2");
  for (int a = 0; a < domain.dim; ++a) {
    if (!(domain.lower[a] < domain.upper[a]))
      throw std::invalid_argument("domain lower corner must be below upper corner");
    if (n[a] < 4) throw std::invalid_argument("mesh needs at least 4 cells per axis");
    h_[a] = (domain.upper[a] - domain.lower[a]) / n[a];
  }
  if (domain.dim == 1) {
    n_[1] = 0;
    h_[1] = 1.0;
  }
  const double dist = domain.observer_distance();
  if (!(dist > 0.0)) {
    std::ostringstream msg;
    msg << "observer point x0 must lie outside the closed domain (signed distance "
        << dist << ")";
    throw std::invalid_argument(msg.str());
  }

  const auto npa = nodes_per_axis();
  interior_lookup_.assign(node_count(), -1);
  boundary_lookup_.assign(node_count(), -1);
  for (int j = 0; j < npa[1]; ++j)
    for (int i = 0; i < npa[0]; ++i)
      if (!is_boundary(i, j)) {
        interior_lookup_[node_id(i, j)] = static_cast<long>(interior_ids_.size());
        interior_ids_.push_back(node_id(i, j));
      }

  auto add = [&](int i, int j, int face, bool corner, double weight) {
    BoundaryNode b;
    b.id = node_id(i, j);
    b.index = {i, j};
    b.position = position(i, j);
    b.face = face;
    b.corner = corner;
    b.normal = {0.0, 0.0};
    b.normal[face / 2] = (face % 2 == 0) ? -1.0 : 1.0;
    double dot = 0.0;
    for (int a = 0; a < domain_.dim; ++a) dot += (b.position[a] - domain_.x0[a]) * b.normal[a];
    b.in_gamma0 = dot > 0.0;
    b.surface_weight = weight;
    boundary_lookup_[b.id] = static_cast<long>(boundary_.size());
    boundary_.push_back(b);
  };

  if (domain_.dim == 1) {
    add(0, 0, 0, false, 1.0);
    add(n_[0], 0, 1, false, 1.0);
    return;
  }
  // Corners go to the lowest-numbered face containing them, i.e. faces 0/1.
  const int nx = n_[0];
  const int ny = n_[1];
  for (int j = 0; j <= ny; ++j) {
    const bool corner = (j == 0 || j == ny);
    const double w = corner ? 0.5 * h_[1] : h_[1];
    add(0, j, 0, corner, w);
  }
  for (int j = 0; j <= ny; ++j) {
    const bool corner = (j == 0 || j == ny);
    const double w = corner ? 0.5 * h_[1] : h_[1];
    add(nx, j, 1, corner, w);
  }
  for (int i = 1; i < nx; ++i) add(i, 0, 2, false, h_[0]);
  for (int i = 1; i < nx; ++i) add(i, ny, 3, false, h_[0]);
}

double Mesh::cell_volume() const { return domain_.dim == 1 ? h_[0] : h_[0] * h_[1]; }

std::array<int, 2> Mesh::nodes_per_axis() const {
  return {n_[0] + 1, domain_.dim == 2 ? n_[1] + 1 : 1};
}

std::size_t Mesh::node_count() const {
  const auto npa = nodes_per_axis();
  return static_cast<std::size_t>(npa[0]) * static_cast<std::size_t>(npa[1]);
}

std::size_t Mesh::node_id(int i, int j) const {
  return static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * (n_[0] + 1);
}

std::array<int, 2> Mesh::node_index(std::size_t id) const {
  const auto stride = static_cast<std::size_t>(n_[0] + 1);
  return {static_cast<int>(id % stride), static_cast<int>(id / stride)};
}

Point Mesh::position(int i, int j) const {
  Point p{domain_.lower[0] + i * h_[0], 0.0};
  if (domain_.dim == 2) p[1] = domain_.lower[1] + j * h_[1];
  return p;
}

bool Mesh::is_boundary(int i, int j) const {
  if (i == 0 || i == n_[0]) return true;
  if (domain_.dim == 2 && (j == 0 || j == n_[1])) return true;
  return false;
}

long Mesh::interior_number(int i, int j) const {
  const auto npa = nodes_per_axis();
  if (i < 0 || j < 0 || i >= npa[0] || j >= npa[1]) return -1;
  return interior_lookup_[node_id(i, j)];
}

const BoundaryNode& Mesh::boundary_node_by_id(std::size_t id) const {
  if (id >= boundary_lookup_.size() || boundary_lookup_[id] < 0)
    throw std::out_of_range("node " + std::to_string(id) + " is not a boundary node");
  return boundary_[static_cast<std::size_t>(boundary_lookup_[id])];
}

std::string Mesh::fingerprint() const {
  std::ostringstream s;
  s.precision(17);
  s << "dim" << domain_.dim << ":n" << n_[0];
  if (domain_.dim == 2) s << "x" << n_[1];
  s << ":lo" << domain_.lower[0];
  if (domain_.dim == 2) s << "," << domain_.lower[1];
  s << ":hi" << domain_.upper[0];
  if (domain_.dim == 2) s << "," << domain_.upper[1];
  return s.str();
}

Mesh build_mesh(const Domain& domain, std::array<int, 2> n) { return Mesh(domain, n); }

Mesh build_mesh(const Domain& domain, int n) { return Mesh(domain, {n, n}); }

std::vector<BoundaryNode> gamma0_nodes(const Mesh& mesh) {
  std::vector<BoundaryNode> out;
  for (const auto& b : mesh.boundary())
    if (b.in_gamma0) out.push_back(b);
  return out;
}

Point boundary_normal(const Mesh& mesh, std::size_t node_id) {
  return mesh.boundary_node_by_id(node_id).normal;
}

}  // namespace sselab
