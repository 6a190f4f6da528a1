#include "rmfem/solve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <sstream>
#include <stdexcept>

namespace rmfem {

SolutionField solve_spd(const SystemMatrix& sys, const ConstraintSet& cs,
                        const SolveOptions& opts, SolveReport* report) {
    const ReducedSystem red = reduce(sys, cs);
    const int n = static_cast<int>(red.matrix.rows());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    SolveReport local;
    if (n > 0) {
        if (n > opts.cg_threshold) {
            Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                     Eigen::DiagonalPreconditioner<double>>
                cg;
            cg.setTolerance(opts.cg_tol);
            cg.setMaxIterations(20 * n);
            cg.compute(red.matrix);
            x = cg.solve(red.rhs);
            if (cg.info() != Eigen::Success)
                throw std::runtime_error("conjugate gradient did not converge");
            local.used_cg = true;
            local.iterations = static_cast<int>(cg.iterations());
            local.relative_residual =
                (red.rhs - red.matrix * x).norm() / std::max(red.rhs.norm(), 1e-300);
        } else {
            // Jacobi equilibration: the penalty and curvature terms put many
            // orders of magnitude between row scales, which plain LDLT cannot
            // absorb in double precision
            Eigen::VectorXd diag = red.matrix.diagonal();
            for (int i = 0; i < n; ++i) {
                if (!(diag(i) > 0.0)) {
                    std::ostringstream os;
                    os << "system not positive definite: diagonal entry " << diag(i) << " at dof "
                       << i;
                    throw std::runtime_error(os.str());
                }
                diag(i) = 1.0 / std::sqrt(diag(i));
            }
            const Eigen::SparseMatrix<double> scaled =
                diag.asDiagonal() * red.matrix * diag.asDiagonal();
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                                  Eigen::AMDOrdering<int>>
                ldlt;
            ldlt.compute(scaled);
            if (ldlt.info() != Eigen::Success)
                throw std::runtime_error("sparse factorization failed");
            // in equilibrated units the pivots of a definite system stay many
            // orders above the eps-level pivots a rigid mode produces
            const double min_pivot = ldlt.vectorD().minCoeff();
            if (!(min_pivot > 1e-13)) {
                std::ostringstream os;
                os << "indefinite or singular system: smallest scaled pivot " << min_pivot
                   << " (largest " << ldlt.vectorD().maxCoeff() << ")";
                throw std::runtime_error(os.str());
            }
            auto apply_inverse = [&](const Eigen::VectorXd& r) {
                return Eigen::VectorXd(diag.asDiagonal() *
                                       ldlt.solve(Eigen::VectorXd(diag.asDiagonal() * r)));
            };
            x = apply_inverse(red.rhs);
            const double fnorm = std::max(red.rhs.norm(), 1e-300);
            double prev = 1e300;
            for (int it = 0; it < opts.refine_steps; ++it) {
                const Eigen::VectorXd r = red.rhs - red.matrix * x;
                local.relative_residual = r.norm() / fnorm;
                if (local.relative_residual < 1e-14 || local.relative_residual > 0.5 * prev)
                    break;  // converged or stagnating
                prev = local.relative_residual;
                x += apply_inverse(r);
            }
            const Eigen::VectorXd r = red.rhs - red.matrix * x;
            local.relative_residual = r.norm() / fnorm;
            // the raw residual of extreme-penalty systems is floored by
            // cancellation in K*x; the normwise backward error is the honest
            // verification
            double row_norm = 0.0;
            for (int k = 0; k < red.matrix.outerSize(); ++k) {
                double s = 0.0;
                for (Eigen::SparseMatrix<double>::InnerIterator it(red.matrix, k); it; ++it)
                    s += std::abs(it.value());
                row_norm = std::max(row_norm, s);
            }
            const double backward = r.norm() / (row_norm * x.norm() + fnorm);
            if (local.relative_residual > 1e-10 && backward > 1e-12) {
                std::ostringstream os;
                os << "solve did not verify: relative residual " << local.relative_residual
                   << ", backward error " << backward << ", smallest scaled pivot " << min_pivot;
                throw std::runtime_error(os.str());
            }
        }
    }
    if (report) *report = local;
    SolutionField sol;
    sol.d = red.expand * x + red.particular;
    return sol;
}

double total_energy(const SystemMatrix& sys, const SolutionField& sol) {
    const Eigen::SparseMatrix<double>& K = sys.matrix();
    return 0.5 * sol.d.dot(K * sol.d) - sol.d.dot(sys.rhs);
}

Eigen::VectorXd reactions(const SystemMatrix& sys, const SolutionField& sol) {
    return sys.matrix() * sol.d - sys.rhs;
}

double sum_reactions(const Eigen::VectorXd& r, const DofMap& dofs, const std::vector<int>& nodes,
                     int comp) {
    double s = 0.0;
    for (int n : nodes) s += r(dofs.u_dof(n, comp));
    return s;
}

namespace {

Eigen::Vector3d sym_voigt(const Eigen::Matrix2d& a) {
    return {a(0, 0), a(1, 1), a(0, 1) + a(1, 0)};
}

// stress Voigt triple (s11, s22, s12) back to a symmetric matrix
Eigen::Matrix2d stress_from_voigt(const Eigen::Vector3d& v) {
    Eigen::Matrix2d m;
    m << v(0), v(2), v(2), v(1);
    return m;
}

}  // namespace

double elastic_energy_by_quadrature(const Mesh2D& mesh, const DofMap& dofs,
                                    const std::vector<VoigtTensor>& material_by_id,
                                    const SolutionField& sol) {
    double energy = 0.0;
    for (int b = 0; b < static_cast<int>(mesh.blocks.size()); ++b) {
        const ElementBlock& block = mesh.blocks[static_cast<size_t>(b)];
        const bool quad = block.kind == CellKind::quad9;
        const QuadratureRule rule = quad ? quad_gauss(3) : tri_gauss_7();
        const int npc = nodes_per_cell(block.kind);
        const int off = mesh.element_offset(b);
        for (int e = 0; e < block.count(); ++e) {
            const auto coords = mesh.cell_coords(b, e);
            const Eigen::Matrix3d c =
                material_by_id.at(static_cast<size_t>(mesh.material_id[static_cast<size_t>(off + e)])).m;
            const int* cell = block.cell(e);
            for (int q = 0; q < rule.weights.size(); ++q) {
                const ScalarShape sh = quad ? q2_shape(rule.points(q, 0), rule.points(q, 1))
                                            : t2_shape(rule.points(q, 0), rule.points(q, 1));
                const ElementMap map = element_map(sh, coords);
                const auto dn = map_gradients(sh, map);
                Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
                for (int k = 0; k < npc; ++k)
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            grad(i, j) += sol.d(dofs.u_dof(cell[k], i)) * dn(k, j);
                const Eigen::Vector3d eps = sym_voigt(grad);
                energy += 0.5 * rule.weights(q) * map.det * eps.dot(c * eps);
            }
        }
    }
    return energy;
}

Eigen::Vector3d average_stress(const Mesh2D& mesh, const DofMap& dofs,
                               const std::vector<VoigtTensor>& material_by_id,
                               const SolutionField& sol) {
    Eigen::Vector3d total = Eigen::Vector3d::Zero();
    double volume = 0.0;
    for (int b = 0; b < static_cast<int>(mesh.blocks.size()); ++b) {
        const ElementBlock& block = mesh.blocks[static_cast<size_t>(b)];
        const bool quad = block.kind == CellKind::quad9;
        const QuadratureRule rule = quad ? quad_gauss(3) : tri_gauss_7();
        const int npc = nodes_per_cell(block.kind);
        const int off = mesh.element_offset(b);
        for (int e = 0; e < block.count(); ++e) {
            const auto coords = mesh.cell_coords(b, e);
            const Eigen::Matrix3d c =
                material_by_id.at(static_cast<size_t>(mesh.material_id[static_cast<size_t>(off + e)])).m;
            const int* cell = block.cell(e);
            for (int q = 0; q < rule.weights.size(); ++q) {
                const ScalarShape sh = quad ? q2_shape(rule.points(q, 0), rule.points(q, 1))
                                            : t2_shape(rule.points(q, 0), rule.points(q, 1));
                const ElementMap map = element_map(sh, coords);
                const auto dn = map_gradients(sh, map);
                Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
                for (int k = 0; k < npc; ++k)
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            grad(i, j) += sol.d(dofs.u_dof(cell[k], i)) * dn(k, j);
                const double w = rule.weights(q) * map.det;
                total += w * (c * sym_voigt(grad));
                volume += w;
            }
        }
    }
    return total / volume;
}

RmmElementState rmm_state_at(const Mesh2D& mesh, const DofMap& dofs, const SolutionField& sol,
                             int elem, double xi, double eta) {
    const ElementBlock& block = mesh.blocks[0];
    const int* cell = block.cell(elem);
    const auto coords = mesh.cell_coords(0, elem);
    const ScalarShape sh = q2_shape(xi, eta);
    const ElementMap map = element_map(sh, coords);
    const auto dn = map_gradients(sh, map);
    const VectorShape vs = map_covariant(nq2_shape(xi, eta), map, nq2_edge_signs(mesh, block, elem));

    RmmElementState st;
    st.u.setZero();
    st.grad_u.setZero();
    st.p.setZero();
    st.curl_p.setZero();
    for (int k = 0; k < 9; ++k)
        for (int i = 0; i < 2; ++i) {
            const double v = sol.d(dofs.u_dof(cell[k], i));
            st.u(i) += v * sh.N(k);
            st.grad_u(i, 0) += v * dn(k, 0);
            st.grad_u(i, 1) += v * dn(k, 1);
        }
    for (int i = 0; i < 12; ++i) {
        int loc;
        if (i < 8) {
            const LocalEdge& ed = kQuadEdges[static_cast<size_t>(i / 2)];
            loc = dofs.p_edge_location(mesh.edge_id(cell[ed.c0], cell[ed.c1]), i % 2);
        } else {
            loc = dofs.p_interior_location(elem, i - 8);
        }
        for (int r = 0; r < 2; ++r) {
            const double v = sol.d(dofs.p_dof(loc, r));
            st.p(r, 0) += v * vs.psi(i, 0);
            st.p(r, 1) += v * vs.psi(i, 1);
            st.curl_p(r) += v * vs.curl(i);
        }
    }
    return st;
}

double rmm_energy_by_quadrature(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat,
                                const SolutionField& sol) {
    const ElementBlock& block = mesh.blocks[0];
    const QuadratureRule rule = quad_gauss(3);
    const double curv = mat.curvature_coeff();
    double energy = 0.0;
    for (int e = 0; e < block.count(); ++e) {
        const auto coords = mesh.cell_coords(0, e);
        for (int q = 0; q < rule.weights.size(); ++q) {
            const double xi = rule.points(q, 0), eta = rule.points(q, 1);
            const ElementMap map = element_map(q2_shape(xi, eta), coords);
            const RmmElementState st = rmm_state_at(mesh, dofs, sol, e, xi, eta);
            const Eigen::Matrix2d rel = st.grad_u - st.p;
            const Eigen::Vector3d e_rel = sym_voigt(rel);
            const Eigen::Vector3d e_mic = sym_voigt(st.p);
            const double skew = 0.5 * (rel(0, 1) - rel(1, 0));
            const double w = rule.weights(q) * map.det;
            energy += 0.5 * w * e_rel.dot(mat.c_e.m * e_rel);
            energy += 0.5 * w * e_mic.dot(mat.c_micro.m * e_mic);
            energy += 2.0 * mat.mu_c * w * skew * skew;
            energy += 0.5 * curv * w * st.curl_p.squaredNorm();
        }
    }
    return energy;
}

namespace {

// Newton inversion of the geometry map; returns true when x lies inside.
bool invert_map(CellKind kind, const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords,
                const Eigen::Vector2d& x, Eigen::Vector2d& ref) {
    ref = (kind == CellKind::quad9) ? Eigen::Vector2d(0.0, 0.0) : Eigen::Vector2d(1.0 / 3.0, 1.0 / 3.0);
    const double scale = (coords.row(0) - coords.row(2)).norm() + 1e-300;
    for (int it = 0; it < 30; ++it) {
        const ScalarShape sh = (kind == CellKind::quad9) ? q2_shape(ref.x(), ref.y())
                                                         : t2_shape(ref.x(), ref.y());
        const Eigen::Vector2d xc = coords.transpose() * sh.N;
        const Eigen::Matrix2d J = coords.transpose() * sh.dN;
        const Eigen::Vector2d dx = x - xc;
        if (dx.norm() < 1e-13 * scale) break;
        ref += J.inverse() * dx;
        if (ref.norm() > 10.0) return false;
    }
    const double tol = 1e-8;
    if (kind == CellKind::quad9)
        return ref.x() >= -1.0 - tol && ref.x() <= 1.0 + tol && ref.y() >= -1.0 - tol &&
               ref.y() <= 1.0 + tol;
    return ref.x() >= -tol && ref.y() >= -tol && ref.x() + ref.y() <= 1.0 + tol;
}

struct Located {
    int block, elem;
    Eigen::Vector2d ref;
};

Located locate_point(const Mesh2D& mesh, const Eigen::Vector2d& x) {
    for (int b = 0; b < static_cast<int>(mesh.blocks.size()); ++b) {
        const ElementBlock& block = mesh.blocks[static_cast<size_t>(b)];
        for (int e = 0; e < block.count(); ++e) {
            const auto coords = mesh.cell_coords(b, e);
            const double margin = 1e-6 * ((coords.colwise().maxCoeff() - coords.colwise().minCoeff()).norm());
            if (x.x() < coords.col(0).minCoeff() - margin || x.x() > coords.col(0).maxCoeff() + margin ||
                x.y() < coords.col(1).minCoeff() - margin || x.y() > coords.col(1).maxCoeff() + margin)
                continue;
            Eigen::Vector2d ref;
            if (invert_map(block.kind, coords, x, ref)) return {b, e, ref};
        }
    }
    std::ostringstream os;
    os << "point (" << x.x() << ", " << x.y() << ") lies outside the mesh";
    throw std::runtime_error(os.str());
}

}  // namespace

FieldSample evaluate_fields(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat,
                            const SolutionField& sol, const Eigen::Vector2d& x) {
    const Located at = locate_point(mesh, x);
    const RmmElementState st = rmm_state_at(mesh, dofs, sol, at.elem, at.ref.x(), at.ref.y());
    FieldSample f;
    f.u = st.u;
    f.grad_u = st.grad_u;
    f.p = st.p;
    f.curl_p = st.curl_p;
    const Eigen::Matrix2d rel = st.grad_u - st.p;
    const double skew = 0.5 * (rel(0, 1) - rel(1, 0));
    Eigen::Matrix2d skew_m;
    skew_m << 0.0, skew, -skew, 0.0;
    f.stress.sigma = stress_from_voigt(mat.c_e.m * sym_voigt(rel)) + 2.0 * mat.mu_c * skew_m;
    f.stress.sigma_micro = stress_from_voigt(mat.c_micro.m * sym_voigt(st.p));
    f.stress.moment_stress = mat.curvature_coeff() * st.curl_p;
    return f;
}

FieldSample evaluate_fields(const Mesh2D& mesh, const DofMap& dofs,
                            const std::vector<VoigtTensor>& material_by_id,
                            const SolutionField& sol, const Eigen::Vector2d& x) {
    const Located at = locate_point(mesh, x);
    const ElementBlock& block = mesh.blocks[static_cast<size_t>(at.block)];
    const int npc = nodes_per_cell(block.kind);
    const auto coords = mesh.cell_coords(at.block, at.elem);
    const ScalarShape sh = (block.kind == CellKind::quad9) ? q2_shape(at.ref.x(), at.ref.y())
                                                           : t2_shape(at.ref.x(), at.ref.y());
    const ElementMap map = element_map(sh, coords);
    const auto dn = map_gradients(sh, map);
    const int* cell = block.cell(at.elem);
    FieldSample f;
    for (int k = 0; k < npc; ++k)
        for (int i = 0; i < 2; ++i) {
            const double v = sol.d(dofs.u_dof(cell[k], i));
            f.u(i) += v * sh.N(k);
            f.grad_u(i, 0) += v * dn(k, 0);
            f.grad_u(i, 1) += v * dn(k, 1);
        }
    const int mat_id = mesh.material_id[static_cast<size_t>(mesh.element_offset(at.block) + at.elem)];
    f.stress.sigma = stress_from_voigt(
        material_by_id.at(static_cast<size_t>(mat_id)).m * sym_voigt(f.grad_u));
    return f;
}

}  // namespace rmfem
