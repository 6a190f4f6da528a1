#pragma once

#include <array>
#include <optional>
#include <string>

#include "rmfem/materials.hpp"
#include "rmfem/mesh.hpp"

// Material-parameter identification: the macro tensor by periodic
// homogenization, apparent affine-Dirichlet tensors and their Loewner
// supremum, the non-affine bending ratio beta, and the candidate micro/coupling
// tensor set.

namespace rmfem {

struct CubicMeasurement {
    CubicParams cubic;
    Eigen::Matrix3d full = Eigen::Matrix3d::Zero();
    double off_cubic_residual = 0.0;
    bool warning = false;  // residual from the cubic form above 1%
};

struct CellMaterials {
    IsotropicParams matrix;     // material id 0
    IsotropicParams inclusion;  // material id 1
    std::vector<VoigtTensor> by_id() const {
        return {isotropic_to_voigt(matrix), isotropic_to_voigt(inclusion)};
    }
};

// Three periodic unit-strain solves; average stress gives the Voigt matrix.
CubicMeasurement homogenize_macro(const Mesh2D& cell, const CellMaterials& mats);

// Affine Dirichlet u = E x on the entire boundary for the three unit strains.
CubicMeasurement apparent_affine(const Mesh2D& cell, const CellMaterials& mats);

// Heterogeneous-to-homogeneous energy ratio under the pure-bending Dirichlet
// field with curvature kappa; the homogeneous reference energy is analytic.
double beta_bending(const Mesh2D& cluster, const CellMaterials& mats, const CubicParams& c_macro,
                    double kappa);

struct Candidate {
    std::string name;
    CubicParams c_micro;
    CubicParams c_e;
};

struct IdentifiedParams {
    CubicParams c_macro;
    double c_macro_residual = 0.0;
    std::array<CubicParams, 4> apparent{};
    std::array<double, 4> apparent_residual{};
    CubicParams lowner;
    double alpha = 1.0;
    double beta_cell = 0.0;                            // single variant-1 cell
    std::vector<std::pair<int, double>> beta_clusters; // (n, beta) including n = 1
    std::vector<Candidate> candidates;
    CellMaterials materials;
    UnitCellSpec cell;

    const Candidate& candidate(const std::string& name) const;
};

// The four named candidates with their Reuss coupling tensors. The
// beta-scaled candidate uses the extrapolated factor as a fixed input.
std::vector<Candidate> build_candidates(const CubicParams& c_macro, const CubicParams& lowner,
                                        double alpha, const IsotropicParams& matrix_material,
                                        double beta_extrapolated = 1.75);

// Full pipeline: C_macro on the chosen variant, apparent tensors on all four
// variants, Loewner supremum, alpha bound, beta on 1x1/2x2/4x4 clusters, and
// the candidate set.
IdentifiedParams run_identification(const UnitCellSpec& cell, const CellMaterials& mats,
                                    int macro_variant = 1, int beta_refinement = -1);

void write_report(const IdentifiedParams& params, const std::string& path);
IdentifiedParams read_report(const std::string& path);

}  // namespace rmfem
