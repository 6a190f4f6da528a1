#include "rmfem/vtk.hpp"

#include <fstream>
#include <stdexcept>

namespace rmfem {

namespace {

int vtk_cell_type(CellKind k) {
    switch (k) {
        case CellKind::quad9: return 28;  // biquadratic quad
        case CellKind::tri6: return 22;   // quadratic triangle
        default: return 21;               // quadratic edge
    }
}

std::ofstream open_or_throw(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.precision(12);
    return out;
}

void write_header(std::ofstream& out, const Mesh2D& mesh) {
    out << "# vtk DataFile Version 3.0\n";
    out << "rmfem mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.n_nodes() << " double\n";
    for (const auto& p : mesh.nodes) out << p.x() << " " << p.y() << " 0\n";
    int n_cells = 0, list_len = 0;
    for (const ElementBlock& b : mesh.blocks) {
        n_cells += b.count();
        list_len += b.count() * (1 + nodes_per_cell(b.kind));
    }
    out << "CELLS " << n_cells << " " << list_len << "\n";
    for (const ElementBlock& b : mesh.blocks) {
        const int npc = nodes_per_cell(b.kind);
        for (int e = 0; e < b.count(); ++e) {
            out << npc;
            const int* c = b.cell(e);
            for (int k = 0; k < npc; ++k) out << " " << c[k];
            out << "\n";
        }
    }
    out << "CELL_TYPES " << n_cells << "\n";
    for (const ElementBlock& b : mesh.blocks)
        for (int e = 0; e < b.count(); ++e) out << vtk_cell_type(b.kind) << "\n";
}

void write_material(std::ofstream& out, const Mesh2D& mesh) {
    out << "CELL_DATA " << mesh.n_elements() << "\n";
    out << "SCALARS material_id int 1\nLOOKUP_TABLE default\n";
    for (int m : mesh.material_id) out << m << "\n";
}

void write_displacement(std::ofstream& out, const Mesh2D& mesh, const DofMap& dofs,
                        const SolutionField& sol) {
    out << "POINT_DATA " << mesh.n_nodes() << "\n";
    out << "VECTORS u double\n";
    for (int n = 0; n < mesh.n_nodes(); ++n)
        out << sol.d(dofs.u_dof(n, 0)) << " " << sol.d(dofs.u_dof(n, 1)) << " 0\n";
}

void write_cell_vector(std::ofstream& out, const std::string& name,
                       const std::vector<Eigen::Vector2d>& v) {
    out << "VECTORS " << name << " double\n";
    for (const auto& x : v) out << x.x() << " " << x.y() << " 0\n";
}

}  // namespace

void write_vtk(const Mesh2D& mesh, const std::string& path) {
    std::ofstream out = open_or_throw(path);
    write_header(out, mesh);
    write_material(out, mesh);
}

void write_vtk_fields(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat,
                      const SolutionField& sol, const std::string& path) {
    std::ofstream out = open_or_throw(path);
    write_header(out, mesh);
    write_displacement(out, mesh, dofs, sol);

    const int n = mesh.blocks[0].count();
    std::vector<Eigen::Vector2d> p_row1(n), p_row2(n), curl(n), sig1(n), sig2(n), sigm1(n),
        sigm2(n), mstress(n);
    for (int e = 0; e < n; ++e) {
        const RmmElementState st = rmm_state_at(mesh, dofs, sol, e, 0.0, 0.0);
        const Eigen::Matrix2d rel = st.grad_u - st.p;
        const double skew = 0.5 * (rel(0, 1) - rel(1, 0));
        const Eigen::Vector3d s =
            mat.c_e.m * Eigen::Vector3d(rel(0, 0), rel(1, 1), rel(0, 1) + rel(1, 0));
        const Eigen::Vector3d sm =
            mat.c_micro.m * Eigen::Vector3d(st.p(0, 0), st.p(1, 1), st.p(0, 1) + st.p(1, 0));
        p_row1[static_cast<size_t>(e)] = st.p.row(0);
        p_row2[static_cast<size_t>(e)] = st.p.row(1);
        curl[static_cast<size_t>(e)] = st.curl_p;
        sig1[static_cast<size_t>(e)] = {s(0), s(2) + 2.0 * mat.mu_c * skew};
        sig2[static_cast<size_t>(e)] = {s(2) - 2.0 * mat.mu_c * skew, s(1)};
        sigm1[static_cast<size_t>(e)] = {sm(0), sm(2)};
        sigm2[static_cast<size_t>(e)] = {sm(2), sm(1)};
        mstress[static_cast<size_t>(e)] = mat.curvature_coeff() * st.curl_p;
    }
    out << "CELL_DATA " << mesh.n_elements() << "\n";
    out << "SCALARS material_id int 1\nLOOKUP_TABLE default\n";
    for (int m : mesh.material_id) out << m << "\n";
    write_cell_vector(out, "P_row1", p_row1);
    write_cell_vector(out, "P_row2", p_row2);
    write_cell_vector(out, "curl_P", curl);
    write_cell_vector(out, "sigma_row1", sig1);
    write_cell_vector(out, "sigma_row2", sig2);
    write_cell_vector(out, "sigma_micro_row1", sigm1);
    write_cell_vector(out, "sigma_micro_row2", sigm2);
    write_cell_vector(out, "moment_stress", mstress);
}

void write_vtk_fields(const Mesh2D& mesh, const DofMap& dofs,
                      const std::vector<VoigtTensor>& material_by_id, const SolutionField& sol,
                      const std::string& path) {
    std::ofstream out = open_or_throw(path);
    write_header(out, mesh);
    write_displacement(out, mesh, dofs, sol);

    std::vector<Eigen::Vector2d> sig1, sig2;
    for (int b = 0; b < static_cast<int>(mesh.blocks.size()); ++b) {
        const ElementBlock& block = mesh.blocks[static_cast<size_t>(b)];
        const bool quad = block.kind == CellKind::quad9;
        const int npc = nodes_per_cell(block.kind);
        const int off = mesh.element_offset(b);
        for (int e = 0; e < block.count(); ++e) {
            const auto coords = mesh.cell_coords(b, e);
            const ScalarShape sh = quad ? q2_shape(0.0, 0.0) : t2_shape(1.0 / 3.0, 1.0 / 3.0);
            const auto dn = map_gradients(sh, element_map(sh, coords));
            const int* cell = block.cell(e);
            Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
            for (int k = 0; k < npc; ++k)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        grad(i, j) += sol.d(dofs.u_dof(cell[k], i)) * dn(k, j);
            const Eigen::Vector3d s =
                material_by_id.at(static_cast<size_t>(mesh.material_id[static_cast<size_t>(off + e)])).m *
                Eigen::Vector3d(grad(0, 0), grad(1, 1), grad(0, 1) + grad(1, 0));
            sig1.push_back({s(0), s(2)});
            sig2.push_back({s(2), s(1)});
        }
    }
    out << "CELL_DATA " << mesh.n_elements() << "\n";
    out << "SCALARS material_id int 1\nLOOKUP_TABLE default\n";
    for (int m : mesh.material_id) out << m << "\n";
    write_cell_vector(out, "sigma_row1", sig1);
    write_cell_vector(out, "sigma_row2", sig2);
}

}  // namespace rmfem
