#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <set>
#include <unordered_map>

#include "rmfem/materials.hpp"
#include "rmfem/mesh.hpp"

// Degree-of-freedom management and assembly of the classical-elasticity and
// relaxed-micromorphic bilinear forms, traction loads, Dirichlet/periodic
// constraints, and the consistent-coupling penalty surface terms.

namespace rmfem {

// Displacement dofs are 2 per mesh node. Micro-distortion dofs attach 2 per
// NQ2 scalar location (one entry per row of P): locations 2e, 2e+1 per mesh
// edge for the two tangential moments, then 4 interior locations per quad.
struct DofMap {
    bool with_p = false;
    int n_u = 0;
    int n_edges = 0;
    int n_quads = 0;

    int u_dof(int node, int comp) const { return 2 * node + comp; }
    int p_edge_location(int edge, int moment) const { return 2 * edge + moment; }
    int p_interior_location(int quad, int k) const { return 2 * n_edges + 4 * quad + k; }
    int p_dof(int location, int row) const { return n_u + 2 * location + row; }
    int n_p_locations() const { return with_p ? 2 * n_edges + 4 * n_quads : 0; }
    int total_dofs() const { return n_u + 2 * n_p_locations(); }
};

DofMap make_elastic_dofmap(const Mesh2D& mesh);
// Requires a mesh with a single quad9 block.
DofMap make_rmm_dofmap(const Mesh2D& mesh);

// Sparse symmetric system kept as triplets; matrix() compresses lazily and
// rebuilds after the triplet list grew (penalty terms are appended after
// volume assembly).
struct SystemMatrix {
    int n = 0;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs;

    const Eigen::SparseMatrix<double>& matrix() const;

  private:
    mutable Eigen::SparseMatrix<double> cached_;
    mutable size_t built_from_ = static_cast<size_t>(-1);
};

// Dirichlet entries plus linear multipoint entries (slave = sum c_i master_i + g).
struct ConstraintSet {
    struct Mpc {
        int slave;
        std::vector<std::pair<int, double>> terms;
        double offset;
    };
    std::unordered_map<int, double> dirichlet;
    std::vector<Mpc> mpcs;
    std::set<int> p_essential_edges;  // mesh edges with essential P values
    std::set<int> p_penalty_edges;    // mesh edges under the coupling penalty

    void set_dirichlet(int dof, double value);  // throws on conflicting value
};

struct ReducedSystem {
    Eigen::SparseMatrix<double> matrix;  // constrained SPD system
    Eigen::VectorXd rhs;
    Eigen::SparseMatrix<double> expand;  // full = expand * reduced + particular
    Eigen::VectorXd particular;
};

ReducedSystem reduce(const SystemMatrix& sys, const ConstraintSet& cs);

SystemMatrix assemble_elasticity(const Mesh2D& mesh, const DofMap& dofs,
                                 const std::vector<VoigtTensor>& material_by_id);

SystemMatrix assemble_rmm(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat);

enum class RowMask { both, x_row, y_row };

// Adds kappa1/2 int |((P - grad u) . tau)_masked|^2 ds over the tagged
// boundary, coupling displacement and micro-distortion surface dofs. Records
// the touched edges in `cs` and throws if any of them already carries
// essential P values.
void add_consistent_coupling_penalty(SystemMatrix& sys, const Mesh2D& mesh, const DofMap& dofs,
                                     const std::string& tag, double kappa1, RowMask mask,
                                     ConstraintSet& cs);

// kappa1/2 int |((P - grad u) . tau)_masked|^2 ds of a given dof vector over
// the tagged boundary, summed positively (no cancellation against the volume
// terms; the algebraic energy of extreme-penalty systems loses digits).
double coupling_penalty_energy(const Mesh2D& mesh, const DofMap& dofs, const std::string& tag,
                               double kappa1, RowMask mask, const Eigen::VectorXd& d);

// Consistent nodal loads int N tbar ds on the tagged boundary.
void add_traction(SystemMatrix& sys, const Mesh2D& mesh, const DofMap& dofs,
                  const std::string& tag,
                  const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& traction);

void apply_dirichlet_u(ConstraintSet& cs, const Mesh2D& mesh, const DofMap& dofs,
                       const std::string& tag,
                       const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& value,
                       bool fix_x = true, bool fix_y = true);

// Essential consistent coupling P . tau = grad_u_bar . tau on the tagged
// boundary: fixes the tangential edge moments of the selected P rows. Throws
// if an edge is already under the penalty.
void apply_dirichlet_p_tangential(ConstraintSet& cs, const Mesh2D& mesh, const DofMap& dofs,
                                  const std::string& tag,
                                  const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& grad_u,
                                  RowMask mask = RowMask::both);

// u_slave = u_master + Ebar . offset per pair; pin_node (if >= 0) is fixed to
// kill the rigid translation.
void apply_periodic(ConstraintSet& cs, const DofMap& dofs, const PeriodicPairs& pairs,
                    const Eigen::Matrix2d& macro_strain, int pin_node);

// Orientation signs of the 12 local NQ2 dofs of a quad element: the constant
// edge moment flips when the local edge direction opposes the canonical
// global one.
std::array<double, 12> nq2_edge_signs(const Mesh2D& mesh, const ElementBlock& block, int elem);

}  // namespace rmfem
