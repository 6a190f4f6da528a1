#pragma once

#include <string>

#include "rmfem/solve.hpp"

namespace rmfem {

// Legacy ASCII export: POINTS / CELLS / CELL_TYPES plus material_id as a
// CELL_DATA scalar.
void write_vtk(const Mesh2D& mesh, const std::string& path);

// Mesh plus solution fields: u as point data; P rows, Curl P, and the stress
// measures as cell data at element centers.
void write_vtk_fields(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat,
                      const SolutionField& sol, const std::string& path);
void write_vtk_fields(const Mesh2D& mesh, const DofMap& dofs,
                      const std::vector<VoigtTensor>& material_by_id, const SolutionField& sol,
                      const std::string& path);

}  // namespace rmfem
