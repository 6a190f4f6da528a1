#pragma once

#include "rmfem/assembly.hpp"

// Sparse symmetric solution and post-processing: energies, reactions, and
// field/stress evaluation.

namespace rmfem {

struct SolveOptions {
    int cg_threshold = 500000;  // dofs above which CG replaces the direct factorization
    double cg_tol = 1e-12;
    int refine_steps = 12;      // iterative refinement after the direct solve
};

struct SolveReport {
    bool used_cg = false;
    int iterations = 0;
    double relative_residual = 0.0;
};

// Full-length dof vector; constrained dofs carry their prescribed values exactly.
struct SolutionField {
    Eigen::VectorXd d;
};

// Solves the constrained system. Throws with a smallest-pivot estimate if the
// reduced matrix is not positive definite. Deterministic for fixed inputs.
SolutionField solve_spd(const SystemMatrix& sys, const ConstraintSet& cs,
                        const SolveOptions& opts = {}, SolveReport* report = nullptr);

// Pi = 1/2 d^T K d - d^T f over the full (unconstrained) system.
double total_energy(const SystemMatrix& sys, const SolutionField& sol);

// Energy density integral evaluated by quadrature; volume terms only.
double elastic_energy_by_quadrature(const Mesh2D& mesh, const DofMap& dofs,
                                    const std::vector<VoigtTensor>& material_by_id,
                                    const SolutionField& sol);
double rmm_energy_by_quadrature(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat,
                                const SolutionField& sol);

// r = K d - f on all dofs; nonzero (up to roundoff) only at constrained dofs.
Eigen::VectorXd reactions(const SystemMatrix& sys, const SolutionField& sol);

// Sum of reaction components over a node set.
double sum_reactions(const Eigen::VectorXd& r, const DofMap& dofs, const std::vector<int>& nodes,
                     int comp);

// Average stress over the mesh (Voigt), from the classical constitutive law.
Eigen::Vector3d average_stress(const Mesh2D& mesh, const DofMap& dofs,
                               const std::vector<VoigtTensor>& material_by_id,
                               const SolutionField& sol);

struct StressState {
    Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();        // force stress
    Eigen::Matrix2d sigma_micro = Eigen::Matrix2d::Zero();  // micro stress
    Eigen::Vector2d moment_stress = Eigen::Vector2d::Zero();
};

struct FieldSample {
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    Eigen::Matrix2d grad_u = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
    Eigen::Vector2d curl_p = Eigen::Vector2d::Zero();
    StressState stress;
};

// Evaluation at a physical point (inverse mapping); throws if the point lies
// outside the mesh.
FieldSample evaluate_fields(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat,
                            const SolutionField& sol, const Eigen::Vector2d& x);
FieldSample evaluate_fields(const Mesh2D& mesh, const DofMap& dofs,
                            const std::vector<VoigtTensor>& material_by_id,
                            const SolutionField& sol, const Eigen::Vector2d& x);

// Element-local RMM state at a reference point; used by energy and export paths.
struct RmmElementState {
    Eigen::Matrix2d grad_u, p;
    Eigen::Vector2d curl_p;
    Eigen::Vector2d u;
};
RmmElementState rmm_state_at(const Mesh2D& mesh, const DofMap& dofs, const SolutionField& sol,
                             int elem, double xi, double eta);

}  // namespace rmfem
