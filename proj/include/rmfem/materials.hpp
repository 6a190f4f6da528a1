#pragma once

#include <Eigen/Dense>
#include <vector>

// Plane-strain elasticity tensor algebra in Voigt form, ordering (11, 22, 12)
// with engineering shear strain. All quantities are SI (Pa, m); GPa appears
// only at I/O boundaries.

namespace rmfem {

enum class SymmetryClass { isotropic, cubic, general };

// Cubic plane-strain tensor: three independent constants.
// Voigt form [[2mu+lambda, lambda, 0], [lambda, 2mu+lambda, 0], [0, 0, mu_star]].
struct CubicParams {
    double lambda = 0.0;   // Pa
    double mu = 0.0;       // Pa
    double mu_star = 0.0;  // Pa

    bool valid() const { return mu > 0.0 && mu_star > 0.0 && lambda + mu > 0.0; }
    CubicParams scaled(double factor) const { return {factor * lambda, factor * mu, factor * mu_star}; }
};

struct IsotropicParams {
    double lambda = 0.0;  // Pa
    double mu = 0.0;      // Pa

    static IsotropicParams from_young_poisson(double young, double poisson);
    double young() const;
    double poisson() const;
    CubicParams as_cubic() const { return {lambda, mu, mu}; }
    bool valid() const { return mu > 0.0 && lambda + mu > 0.0; }
};

struct VoigtTensor {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    SymmetryClass sym = SymmetryClass::general;

    bool symmetric(double rel_tol = 1e-12) const;
    bool positive_definite() const;
    double min_eigenvalue() const;
};

VoigtTensor cubic_to_voigt(const CubicParams& p);
VoigtTensor isotropic_to_voigt(const IsotropicParams& p);

// Nearest cubic parameters of a 3x3 Voigt matrix; off_cubic_residual (if given)
// receives ||C - C_cubic||_F / ||C||_F.
CubicParams voigt_to_cubic(const VoigtTensor& c, double* off_cubic_residual = nullptr);

// C_e = C_micro (C_micro - C_macro)^-1 C_macro. Requires C_micro - C_macro
// positive definite; throws otherwise.
VoigtTensor reuss_ce(const VoigtTensor& c_micro, const VoigtTensor& c_macro);

// Least upper bound of cubic tensors in the Loewner order restricted to the
// cubic class: mu_star = max mu*_i, mu = max mu_i, lambda = max(lambda_i + mu_i) - mu.
CubicParams lowner_sup_cubic(const std::vector<CubicParams>& candidates);

// Largest alpha with alpha * C_lowner <= C_matrix in the Loewner order,
// min of the three scalar ratios of the cubic comparison.
double alpha_upper_bound(const IsotropicParams& matrix, const CubicParams& lowner);

// Condensed normal-block modulus driving pure bending about the lattice axes:
// (2mu+lambda) - lambda^2/(2mu+lambda). Equals E/(1-nu^2) for isotropic inputs.
double plane_strain_bending_modulus(const CubicParams& p);

// Full parameter set of the relaxed micromorphic continuum. The rotational
// coupling is C_c = 2 mu_c * identity on skew parts; the curvature tensor is
// the identity, so the curl term carries the single coefficient
// mu_curv * (lc / n_scale)^2.
struct RmmMaterial {
    VoigtTensor c_e;
    VoigtTensor c_micro;
    double mu_c = 0.0;      // Pa, Cosserat couple modulus
    double mu_curv = 0.0;   // Pa, shear modulus of the curvature term
    double lc = 0.0;        // m, characteristic length
    double n_scale = 1.0;   // dimensionless size index
    double kappa1 = 0.0;    // Pa*m, consistent-coupling penalty

    double curvature_coeff() const {
        const double ratio = lc / n_scale;
        return mu_curv * ratio * ratio;
    }
    void validate() const;  // throws on violated invariants
};

// Default penalty magnitude: 1e3 * (1 + (lc/n)^2 / l^2) * mu_ref * l, i.e.
// the penalty dominates both the elastic and the curvature stiffness by ~1e3
// for any lc.
double default_coupling_penalty(double mu_ref, double lc_over_n, double cell_l);

}  // namespace rmfem
