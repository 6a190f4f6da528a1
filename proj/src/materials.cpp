#include "rmfem/materials.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace rmfem {

IsotropicParams IsotropicParams::from_young_poisson(double young, double poisson) {
    if (young <= 0.0 || poisson <= -1.0 || poisson >= 0.5)
        throw std::invalid_argument("isotropic parameters out of range");
    IsotropicParams p;
    p.lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    p.mu = young / (2.0 * (1.0 + poisson));
    return p;
}

double IsotropicParams::young() const { return mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu); }

double IsotropicParams::poisson() const { return lambda / (2.0 * (lambda + mu)); }

bool VoigtTensor::symmetric(double rel_tol) const {
    return (m - m.transpose()).norm() <= rel_tol * m.norm();
}

double VoigtTensor::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

bool VoigtTensor::positive_definite() const { return min_eigenvalue() > 0.0; }

VoigtTensor cubic_to_voigt(const CubicParams& p) {
    if (!p.valid()) throw std::invalid_argument("cubic parameters violate positive definiteness");
    VoigtTensor c;
    c.m << 2.0 * p.mu + p.lambda, p.lambda, 0.0,
           p.lambda, 2.0 * p.mu + p.lambda, 0.0,
           0.0, 0.0, p.mu_star;
    c.sym = (p.mu == p.mu_star) ? SymmetryClass::isotropic : SymmetryClass::cubic;
    return c;
}

VoigtTensor isotropic_to_voigt(const IsotropicParams& p) {
    VoigtTensor c = cubic_to_voigt(p.as_cubic());
    c.sym = SymmetryClass::isotropic;
    return c;
}

CubicParams voigt_to_cubic(const VoigtTensor& c, double* off_cubic_residual) {
    CubicParams p;
    const double c11 = 0.5 * (c.m(0, 0) + c.m(1, 1));
    p.lambda = 0.5 * (c.m(0, 1) + c.m(1, 0));
    p.mu = 0.5 * (c11 - p.lambda);
    p.mu_star = c.m(2, 2);
    if (off_cubic_residual) {
        const Eigen::Matrix3d fit = cubic_to_voigt(p).m;
        *off_cubic_residual = (c.m - fit).norm() / c.m.norm();
    }
    return p;
}

VoigtTensor reuss_ce(const VoigtTensor& c_micro, const VoigtTensor& c_macro) {
    VoigtTensor diff;
    diff.m = c_micro.m - c_macro.m;
    if (!diff.positive_definite())
        throw std::invalid_argument("reuss_ce: micro not stiffer than macro");
    VoigtTensor ce;
    ce.m = c_micro.m * diff.m.inverse() * c_macro.m;
    ce.m = 0.5 * (ce.m + ce.m.transpose());
    ce.sym = (c_micro.sym == SymmetryClass::general || c_macro.sym == SymmetryClass::general)
                 ? SymmetryClass::general
                 : SymmetryClass::cubic;
    return ce;
}

CubicParams lowner_sup_cubic(const std::vector<CubicParams>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("lowner_sup_cubic: empty candidate list");
    CubicParams sup;
    sup.mu_star = candidates.front().mu_star;
    sup.mu = candidates.front().mu;
    double lam_plus_mu = candidates.front().lambda + candidates.front().mu;
    for (const CubicParams& c : candidates) {
        sup.mu_star = std::max(sup.mu_star, c.mu_star);
        sup.mu = std::max(sup.mu, c.mu);
        lam_plus_mu = std::max(lam_plus_mu, c.lambda + c.mu);
    }
    sup.lambda = lam_plus_mu - sup.mu;
    return sup;
}

double alpha_upper_bound(const IsotropicParams& matrix, const CubicParams& lowner) {
    const double r1 = matrix.mu / lowner.mu_star;  // isotropic mu* equals mu
    const double r2 = matrix.mu / lowner.mu;
    const double r3 = (matrix.mu + matrix.lambda) / (lowner.mu + lowner.lambda);
    return std::min({r1, r2, r3});
}

double plane_strain_bending_modulus(const CubicParams& p) {
    const double c11 = 2.0 * p.mu + p.lambda;
    return c11 - p.lambda * p.lambda / c11;
}

void RmmMaterial::validate() const {
    if (!c_e.positive_definite()) throw std::invalid_argument("RmmMaterial: c_e not positive definite");
    if (!c_micro.positive_definite())
        throw std::invalid_argument("RmmMaterial: c_micro not positive definite");
    if (mu_c < 0.0) throw std::invalid_argument("RmmMaterial: mu_c < 0");
    if (lc < 0.0) throw std::invalid_argument("RmmMaterial: lc < 0");
    if (kappa1 < 0.0) throw std::invalid_argument("RmmMaterial: kappa1 < 0");
    if (n_scale <= 0.0) throw std::invalid_argument("RmmMaterial: n_scale <= 0");
    if (mu_curv < 0.0) throw std::invalid_argument("RmmMaterial: mu_curv < 0");
}

double default_coupling_penalty(double mu_ref, double lc_over_n, double cell_l) {
    const double ratio = lc_over_n / cell_l;
    return 1e3 * (1.0 + ratio * ratio) * mu_ref * cell_l;
}

}  // namespace rmfem
