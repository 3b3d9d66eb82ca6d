#pragma once

// Box domains (intervals and axis-aligned rectangles), uniform node meshes,
// outward normals and the observed boundary part selected by an exterior
// observer point x0.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sselab {

using Point = std::array<double, 2>;

struct Domain {
  int dim = 1;
  Point lower{0.0, 0.0};
  Point upper{1.0, 0.0};
  Point x0{-1.0, 0.0};

  /// Squared distance range {min, max} of |x - x0|^2 over the closed box.
  std::array<double, 2> squared_distance_range() const;
  /// Signed distance of x0 to the closed box (negative when inside).
  double observer_distance() const;
};

/// Faces are numbered 0: x=lo, 1: x=hi, 2: y=lo, 3: y=hi.
struct BoundaryNode {
  std::size_t id = 0;           ///< global node id
  std::array<int, 2> index{};   ///< per-axis grid index
  Point position{};
  Point normal{};
  int face = 0;
  bool corner = false;
  bool in_gamma0 = false;
  /// Surface measure carried by this node (1 in 1D; h or h/2 at corners in 2D).
  double surface_weight = 1.0;
};

class Mesh {
 public:
  Mesh(const Domain& domain, std::array<int, 2> n);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  std::array<int, 2> cells() const { return n_; }
  std::array<double, 2> spacing() const { return h_; }
  double cell_volume() const;

  /// Nodes per axis (n + 1 in the first dim axes, 1 otherwise).
  std::array<int, 2> nodes_per_axis() const;
  std::size_t node_count() const;
  std::size_t node_id(int i, int j = 0) const;
  std::array<int, 2> node_index(std::size_t id) const;
  Point position(int i, int j = 0) const;
  Point position(std::size_t id) const { auto ij = node_index(id); return position(ij[0], ij[1]); }
  bool is_boundary(int i, int j = 0) const;

  /// Interior nodes are numbered 0..interior_count()-1, x fastest.
  std::size_t interior_count() const { return interior_ids_.size(); }
  std::span<const std::size_t> interior_ids() const { return interior_ids_; }
  /// Interior number of a node or -1 for boundary nodes.
  long interior_number(int i, int j = 0) const;
  Point interior_position(std::size_t k) const { return position(interior_ids_[k]); }

  std::span<const BoundaryNode> boundary() const { return boundary_; }
  const BoundaryNode& boundary_node_by_id(std::size_t id) const;

  /// Stable text identifying the discretization (used in reports).
  std::string fingerprint() const;

 private:
  Domain domain_;
  std::array<int, 2> n_{};
  std::array<double, 2> h_{};
  std::vector<std::size_t> interior_ids_;
  std::vector<long> interior_lookup_;
  std::vector<BoundaryNode> boundary_;
  std::vector<long> boundary_lookup_;
};

/// Uniform mesh with n cells per axis. Requires n >= 4 and rejects x0 inside
/// the closed domain.
Mesh build_mesh(const Domain& domain, std::array<int, 2> n);
Mesh build_mesh(const Domain& domain, int n);

/// Boundary nodes with (x - x0) . nu > 0.
std::vector<BoundaryNode> gamma0_nodes(const Mesh& mesh);

/// Outward unit normal at a boundary node; throws for interior ids.
Point boundary_normal(const Mesh& mesh, std::size_t node_id);

}  // namespace sselab
