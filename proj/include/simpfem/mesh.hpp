#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "simpfem/core.hpp"

namespace simpfem {

/// Sides of the rectangle [0, width] x [0, height]. The parameter t along a
/// side always runs in the direction of the increasing coordinate.
enum class Side { Bottom, Right, Top, Left };

inline const char* to_string(Side s) {
  switch (s) {
    case Side::Bottom: return "bottom";
    case Side::Right: return "right";
    case Side::Top: return "top";
    case Side::Left: return "left";
  }
  return "?";
}

/// Displacement components constrained by a Dirichlet segment.
enum Component : unsigned { kComponentX = 1u, kComponentY = 2u, kComponentXY = 3u };

struct Segment {
  Side side = Side::Left;
  double t0 = 0.0;
  double t1 = 1.0;
  unsigned components = kComponentXY;  // ignored for Neumann segments
};

struct Domain {
  double width = 1.0;
  double height = 1.0;
  std::vector<Segment> dirichlet;
  std::vector<Segment> neumann;

  double area() const { return width * height; }
  double side_length(Side s) const {
    return (s == Side::Bottom || s == Side::Top) ? width : height;
  }
};

/// Boundary edge (or part of one) carrying traction. `a` is the endpoint with
/// the smaller coordinate along the side; [s0, s1] is the loaded sub-interval
/// in the edge's own unit parameter.
struct BoundaryEdge {
  int element = -1;
  int local_edge = -1;
  Side side = Side::Bottom;
  int a = -1;
  int b = -1;
  double s0 = 0.0;
  double s1 = 1.0;
};

class Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

/// Structured rectangular mesh. Nodes are numbered row-major with y outer,
/// node(i, j) = j (nx + 1) + i; element(i, j) = j nx + i with
/// counterclockwise connectivity starting at the lower-left corner.
class Mesh {
 public:
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int num_nodes() const { return (nx_ + 1) * (ny_ + 1); }
  int num_elements() const { return nx_ * ny_; }
  int num_dofs() const { return 2 * num_nodes(); }
  double dx() const { return domain_.width / nx_; }
  double dy() const { return domain_.height / ny_; }
  double element_area() const { return dx() * dy(); }
  /// Element diagonal; all elements are congruent.
  double h() const { return std::sqrt(dx() * dx() + dy() * dy()); }
  const Domain& domain() const { return domain_; }

  int node_index(int i, int j) const { return j * (nx_ + 1) + i; }
  int element_index(int i, int j) const { return j * nx_ + i; }

  Vec2 node(int n) const { return coords_[static_cast<std::size_t>(n)]; }
  const std::vector<Vec2>& node_coords() const { return coords_; }
  const std::vector<std::array<int, 4>>& elements() const { return elements_; }
  const std::array<int, 4>& element_nodes(int e) const {
    return elements_[static_cast<std::size_t>(e)];
  }
  Vec2 element_center(int e) const {
    const int i = e % nx_;
    const int j = e / nx_;
    return {(domain_.width * (2 * i + 1)) / (2 * nx_),
            (domain_.height * (2 * j + 1)) / (2 * ny_)};
  }
  /// Physical point of reference coordinates (xi, eta) inside element e.
  Vec2 map_point(int e, double xi, double eta) const {
    const Vec2 c = element_center(e);
    return {c.x + 0.5 * dx() * xi, c.y + 0.5 * dy() * eta};
  }

  const std::vector<int>& dirichlet_nodes() const { return dirichlet_nodes_; }
  /// Per-dof flag (dof = 2 node + component) set when the dof is prescribed.
  const std::vector<std::uint8_t>& fixed_dofs() const { return fixed_dofs_; }
  const std::vector<BoundaryEdge>& neumann_edges() const { return neumann_edges_; }
  const MeshPtr& parent() const { return parent_; }

  /// Number of refinements separating `ancestor` from this mesh, or -1 if
  /// `ancestor` is not on the parent chain.
  int depth_below(const Mesh* ancestor) const {
    int depth = 0;
    for (const Mesh* m = this; m != nullptr; m = m->parent_.get(), ++depth) {
      if (m == ancestor) return depth;
    }
    return -1;
  }

 private:
  friend MeshPtr build_mesh(const Domain&, int, int);
  friend MeshPtr refine(const MeshPtr&);

  Mesh() = default;
  void generate();

  int nx_ = 0;
  int ny_ = 0;
  Domain domain_;
  std::vector<Vec2> coords_;
  std::vector<std::array<int, 4>> elements_;
  std::vector<int> dirichlet_nodes_;
  std::vector<std::uint8_t> fixed_dofs_;
  std::vector<BoundaryEdge> neumann_edges_;
  MeshPtr parent_;
};

namespace detail {

inline constexpr double kParamTol = 1e-12;

inline void validate_segment(const Segment& s, const char* what) {
  if (!(s.t0 >= 0.0 && s.t1 <= 1.0 && s.t0 < s.t1)) {
    throw InvalidArgument(std::string(what) + " segment on " + to_string(s.side) +
                          " must satisfy 0 <= t0 < t1 <= 1");
  }
}

inline void validate_domain(const Domain& d) {
  if (!(d.width > 0.0) || !(d.height > 0.0)) {
    throw InvalidArgument("domain extents must be positive");
  }
  if (d.dirichlet.empty()) {
    throw InvalidArgument("Dirichlet boundary is empty");
  }
  for (const auto& s : d.dirichlet) {
    validate_segment(s, "Dirichlet");
    if ((s.components & kComponentXY) == 0) {
      throw InvalidArgument("Dirichlet segment constrains no component");
    }
  }
  for (const auto& s : d.neumann) validate_segment(s, "Neumann");
  for (const auto& dseg : d.dirichlet) {
    for (const auto& nseg : d.neumann) {
      if (dseg.side != nseg.side) continue;
      const double overlap = std::min(dseg.t1, nseg.t1) - std::max(dseg.t0, nseg.t0);
      if (overlap > kParamTol) {
        throw InvalidArgument(std::string("Dirichlet and Neumann segments overlap on ") +
                              to_string(dseg.side));
      }
    }
  }
}

}  // namespace detail

inline void Mesh::generate() {
  const double W = domain_.width;
  const double H = domain_.height;
  coords_.resize(static_cast<std::size_t>(num_nodes()));
  // (W i) / nx keeps nodes shared with a parent bit-identical.
  for (int j = 0; j <= ny_; ++j) {
    for (int i = 0; i <= nx_; ++i) {
      coords_[static_cast<std::size_t>(node_index(i, j))] = {(W * i) / nx_, (H * j) / ny_};
    }
  }
  elements_.resize(static_cast<std::size_t>(num_elements()));
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      elements_[static_cast<std::size_t>(element_index(i, j))] = {
          node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1),
          node_index(i, j + 1)};
    }
  }

  // Boundary walk: for each side, the nodes in increasing-parameter order and
  // the adjacent element / local edge of each boundary edge.
  struct SideWalk {
    Side side;
    int count;  // number of edges
  };
  const std::array<SideWalk, 4> sides = {SideWalk{Side::Bottom, nx_}, SideWalk{Side::Right, ny_},
                                          SideWalk{Side::Top, nx_}, SideWalk{Side::Left, ny_}};
  auto side_node = [&](Side s, int k) {
    switch (s) {
      case Side::Bottom: return node_index(k, 0);
      case Side::Right: return node_index(nx_, k);
      case Side::Top: return node_index(k, ny_);
      case Side::Left: return node_index(0, k);
    }
    return -1;
  };
  auto side_edge = [&](Side s, int k) -> std::pair<int, int> {
    switch (s) {
      case Side::Bottom: return {element_index(k, 0), 0};
      case Side::Right: return {element_index(nx_ - 1, k), 1};
      case Side::Top: return {element_index(k, ny_ - 1), 2};
      case Side::Left: return {element_index(0, k), 3};
    }
    return {-1, -1};
  };

  fixed_dofs_.assign(static_cast<std::size_t>(num_dofs()), 0);
  bool has_constrained_edge = false;
  for (const auto& walk : sides) {
    const double n_edges = walk.count;
    for (const auto& seg : domain_.dirichlet) {
      if (seg.side != walk.side) continue;
      std::vector<unsigned> mask(static_cast<std::size_t>(walk.count + 1), 0u);
      for (int k = 0; k <= walk.count; ++k) {
        const double t = k / n_edges;
        if (t >= seg.t0 - detail::kParamTol && t <= seg.t1 + detail::kParamTol) {
          const int n = side_node(walk.side, k);
          mask[static_cast<std::size_t>(k)] = seg.components;
          if (seg.components & kComponentX) fixed_dofs_[2 * static_cast<std::size_t>(n)] = 1;
          if (seg.components & kComponentY) fixed_dofs_[2 * static_cast<std::size_t>(n) + 1] = 1;
        }
      }
      for (int k = 0; k < walk.count; ++k) {
        if (mask[static_cast<std::size_t>(k)] & mask[static_cast<std::size_t>(k) + 1]) {
          has_constrained_edge = true;
        }
      }
    }
    for (const auto& seg : domain_.neumann) {
      if (seg.side != walk.side) continue;
      for (int k = 0; k < walk.count; ++k) {
        const double lo = std::max(seg.t0 * n_edges - k, 0.0);
        const double hi = std::min(seg.t1 * n_edges - k, 1.0);
        if (hi - lo <= detail::kParamTol) continue;
        const auto [elem, local] = side_edge(walk.side, k);
        neumann_edges_.push_back({elem, local, walk.side, side_node(walk.side, k),
                                  side_node(walk.side, k + 1), lo, hi});
      }
    }
  }
  if (!has_constrained_edge) {
    throw InvalidArgument("Dirichlet boundary has zero measure on a " + std::to_string(nx_) +
                          "x" + std::to_string(ny_) + " mesh");
  }
  for (int n = 0; n < num_nodes(); ++n) {
    if (fixed_dofs_[2 * static_cast<std::size_t>(n)] ||
        fixed_dofs_[2 * static_cast<std::size_t>(n) + 1]) {
      dirichlet_nodes_.push_back(n);
    }
  }
}

/// Uniform nx x ny mesh of the domain rectangle with tagged boundaries.
inline MeshPtr build_mesh(const Domain& domain, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("element counts must be >= 1");
  detail::validate_domain(domain);
  auto mesh = std::shared_ptr<Mesh>(new Mesh());
  mesh->nx_ = nx;
  mesh->ny_ = ny;
  mesh->domain_ = domain;
  mesh->generate();
  return mesh;
}

/// 4-to-1 uniform refinement; the child keeps a link to `mesh`.
inline MeshPtr refine(const MeshPtr& mesh) {
  if (!mesh) throw InvalidArgument("refine: null mesh");
  auto child = std::shared_ptr<Mesh>(new Mesh());
  child->nx_ = 2 * mesh->nx();
  child->ny_ = 2 * mesh->ny();
  child->domain_ = mesh->domain();
  child->parent_ = mesh;
  child->generate();
  return child;
}

/// Nested family: base mesh plus (levels - 1) refinements.
inline std::vector<MeshPtr> mesh_family(const MeshPtr& base, int levels) {
  std::vector<MeshPtr> family{base};
  for (int l = 1; l < levels; ++l) family.push_back(refine(family.back()));
  return family;
}

/// Scalar finite element function: one value per element (DG0) or per node (Q1).
struct ScalarField {
  MeshPtr mesh;
  Space space = Space::DG0;
  Eigen::VectorXd coeffs;
};

inline Eigen::Index space_dimension(const Mesh& mesh, Space space) {
  return space == Space::DG0 ? mesh.num_elements() : mesh.num_nodes();
}

namespace detail {

inline Eigen::VectorXd prolong_once(const Mesh& fine, Space space, const Eigen::VectorXd& c) {
  const Mesh& coarse = *fine.parent();
  Eigen::VectorXd out(space_dimension(fine, space));
  if (space == Space::DG0) {
    for (int J = 0; J < fine.ny(); ++J) {
      for (int I = 0; I < fine.nx(); ++I) {
        out[fine.element_index(I, J)] = c[coarse.element_index(I / 2, J / 2)];
      }
    }
    return out;
  }
  for (int J = 0; J <= fine.ny(); ++J) {
    for (int I = 0; I <= fine.nx(); ++I) {
      const int i = I / 2;
      const int j = J / 2;
      const bool odd_i = I % 2 != 0;
      const bool odd_j = J % 2 != 0;
      double v;
      if (!odd_i && !odd_j) {
        v = c[coarse.node_index(i, j)];
      } else if (odd_i && !odd_j) {
        v = 0.5 * (c[coarse.node_index(i, j)] + c[coarse.node_index(i + 1, j)]);
      } else if (!odd_i && odd_j) {
        v = 0.5 * (c[coarse.node_index(i, j)] + c[coarse.node_index(i, j + 1)]);
      } else {
        v = 0.25 * (c[coarse.node_index(i, j)] + c[coarse.node_index(i + 1, j)] +
                    c[coarse.node_index(i, j + 1)] + c[coarse.node_index(i + 1, j + 1)]);
      }
      out[fine.node_index(I, J)] = v;
    }
  }
  return out;
}

inline void require_nested(const Mesh& from, const MeshPtr& target, int& depth) {
  if (!target) throw InvalidArgument("prolong: null target mesh");
  depth = target->depth_below(&from);
  if (depth < 0) throw InvalidArgument("prolong: meshes are not nested");
}

}  // namespace detail

/// Exact injection of a coarse DG0/Q1 field into a nested finer mesh.
inline ScalarField prolong_scalar(const ScalarField& field, const MeshPtr& target) {
  int depth = 0;
  detail::require_nested(*field.mesh, target, depth);
  std::vector<const Mesh*> chain;
  for (const Mesh* m = target.get(); m != field.mesh.get(); m = m->parent().get()) {
    chain.push_back(m);
  }
  Eigen::VectorXd c = field.coeffs;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    c = detail::prolong_once(**it, field.space, c);
  }
  return {target, field.space, std::move(c)};
}

/// Prolongation of an interleaved vector-Q1 coefficient array (2 per node).
inline Eigen::VectorXd prolong_vector_q1(const MeshPtr& from, const Eigen::VectorXd& coeffs,
                                         const MeshPtr& target) {
  const Eigen::Index n = from->num_nodes();
  ScalarField ux{from, Space::Q1, Eigen::VectorXd(n)};
  ScalarField uy{from, Space::Q1, Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    ux.coeffs[k] = coeffs[2 * k];
    uy.coeffs[k] = coeffs[2 * k + 1];
  }
  const auto fx = prolong_scalar(ux, target);
  const auto fy = prolong_scalar(uy, target);
  Eigen::VectorXd out(2 * fx.coeffs.size());
  for (Eigen::Index k = 0; k < fx.coeffs.size(); ++k) {
    out[2 * k] = fx.coeffs[k];
    out[2 * k + 1] = fy.coeffs[k];
  }
  return out;
}

/// Element-midpoint sampling of a field (identity for DG0).
inline Eigen::VectorXd element_midpoint_values(const ScalarField& f) {
  if (f.space == Space::DG0) return f.coeffs;
  const Mesh& m = *f.mesh;
  Eigen::VectorXd out(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& nodes = m.element_nodes(e);
    out[e] = 0.25 * (f.coeffs[nodes[0]] + f.coeffs[nodes[1]] + f.coeffs[nodes[2]] +
                     f.coeffs[nodes[3]]);
  }
  return out;
}

}  // namespace simpfem
