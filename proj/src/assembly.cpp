#include "rmfem/assembly.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rmfem {

DofMap make_elastic_dofmap(const Mesh2D& mesh) {
    DofMap d;
    d.with_p = false;
    d.n_u = 2 * mesh.n_nodes();
    return d;
}

DofMap make_rmm_dofmap(const Mesh2D& mesh) {
    if (mesh.blocks.size() != 1 || mesh.blocks[0].kind != CellKind::quad9)
        throw std::invalid_argument("rmm dofmap requires a single quad9 block");
    if (mesh.edges.empty())
        throw std::invalid_argument("rmm dofmap requires a built edge table");
    DofMap d;
    d.with_p = true;
    d.n_u = 2 * mesh.n_nodes();
    d.n_edges = static_cast<int>(mesh.edges.size());
    d.n_quads = mesh.blocks[0].count();
    return d;
}

const Eigen::SparseMatrix<double>& SystemMatrix::matrix() const {
    if (built_from_ != triplets.size()) {
        cached_.resize(n, n);
        cached_.setFromTriplets(triplets.begin(), triplets.end());
        built_from_ = triplets.size();
    }
    return cached_;
}

void ConstraintSet::set_dirichlet(int dof, double value) {
    auto [it, inserted] = dirichlet.emplace(dof, value);
    if (!inserted && std::abs(it->second - value) > 1e-12 * std::max(1.0, std::abs(it->second)))
        throw std::runtime_error("conflicting Dirichlet values on one dof");
}

ReducedSystem reduce(const SystemMatrix& sys, const ConstraintSet& cs) {
    const int n = sys.n;
    std::vector<char> is_slave(static_cast<size_t>(n), 0);
    for (const auto& m : cs.mpcs) {
        if (cs.dirichlet.count(m.slave))
            throw std::runtime_error("dof is both Dirichlet and multipoint slave");
        if (is_slave[static_cast<size_t>(m.slave)])
            throw std::runtime_error("dof is slave of two multipoint constraints");
        is_slave[static_cast<size_t>(m.slave)] = 1;
    }
    // resolve masters that are themselves Dirichlet; forbid slave-of-slave chains
    struct Resolved {
        std::vector<std::pair<int, double>> terms;
        double offset;
    };
    std::vector<Resolved> resolved(cs.mpcs.size());
    for (size_t k = 0; k < cs.mpcs.size(); ++k) {
        const auto& m = cs.mpcs[k];
        Resolved r{{}, m.offset};
        for (const auto& [master, coef] : m.terms) {
            if (is_slave[static_cast<size_t>(master)])
                throw std::runtime_error("multipoint constraint chains are not supported");
            auto it = cs.dirichlet.find(master);
            if (it != cs.dirichlet.end())
                r.offset += coef * it->second;
            else
                r.terms.emplace_back(master, coef);
        }
        resolved[k] = std::move(r);
    }

    std::vector<int> red_index(static_cast<size_t>(n), -1);
    int n_red = 0;
    for (int dof = 0; dof < n; ++dof)
        if (!cs.dirichlet.count(dof) && !is_slave[static_cast<size_t>(dof)])
            red_index[static_cast<size_t>(dof)] = n_red++;

    ReducedSystem red;
    red.particular = Eigen::VectorXd::Zero(n);
    for (const auto& [dof, val] : cs.dirichlet) red.particular(dof) = val;

    std::vector<Eigen::Triplet<double>> t_trips;
    for (int dof = 0; dof < n; ++dof)
        if (red_index[static_cast<size_t>(dof)] >= 0)
            t_trips.emplace_back(dof, red_index[static_cast<size_t>(dof)], 1.0);
    for (size_t k = 0; k < cs.mpcs.size(); ++k) {
        const int slave = cs.mpcs[k].slave;
        red.particular(slave) = resolved[k].offset;
        for (const auto& [master, coef] : resolved[k].terms)
            t_trips.emplace_back(slave, red_index[static_cast<size_t>(master)], coef);
    }
    red.expand.resize(n, n_red);
    red.expand.setFromTriplets(t_trips.begin(), t_trips.end());

    const Eigen::SparseMatrix<double>& K = sys.matrix();
    red.matrix = red.expand.transpose() * K * red.expand;
    red.rhs = red.expand.transpose() * (sys.rhs - K * red.particular);
    return red;
}

namespace {

Eigen::Matrix3d voigt_or_throw(const std::vector<VoigtTensor>& mats, int id) {
    if (id < 0 || id >= static_cast<int>(mats.size()))
        throw std::runtime_error("missing material id " + std::to_string(id));
    return mats[static_cast<size_t>(id)].m;
}

}  // namespace

SystemMatrix assemble_elasticity(const Mesh2D& mesh, const DofMap& dofs,
                                 const std::vector<VoigtTensor>& material_by_id) {
    SystemMatrix sys;
    sys.n = dofs.total_dofs();
    sys.rhs = Eigen::VectorXd::Zero(sys.n);
    for (int b = 0; b < static_cast<int>(mesh.blocks.size()); ++b) {
        const ElementBlock& block = mesh.blocks[static_cast<size_t>(b)];
        const bool quad = block.kind == CellKind::quad9;
        if (!quad && block.kind != CellKind::tri6)
            throw std::invalid_argument("assemble_elasticity: unsupported element kind");
        const QuadratureRule rule = quad ? quad_gauss(3) : tri_gauss_7();
        const int npc = nodes_per_cell(block.kind);
        const int ndof = 2 * npc;
        const int mat_off = mesh.element_offset(b);
        std::vector<ScalarShape> shapes;
        for (int q = 0; q < rule.weights.size(); ++q)
            shapes.push_back(quad ? q2_shape(rule.points(q, 0), rule.points(q, 1))
                                  : t2_shape(rule.points(q, 0), rule.points(q, 1)));
        Eigen::MatrixXd ke(ndof, ndof);
        Eigen::MatrixXd bmat(3, ndof);
        for (int e = 0; e < block.count(); ++e) {
            const Eigen::Matrix3d c = voigt_or_throw(material_by_id,
                                                     mesh.material_id[static_cast<size_t>(mat_off + e)]);
            const auto coords = mesh.cell_coords(b, e);
            ke.setZero();
            for (int q = 0; q < rule.weights.size(); ++q) {
                const ElementMap map = element_map(shapes[static_cast<size_t>(q)], coords);
                const auto dn = map_gradients(shapes[static_cast<size_t>(q)], map);
                bmat.setZero();
                for (int k = 0; k < npc; ++k) {
                    bmat(0, 2 * k) = dn(k, 0);
                    bmat(1, 2 * k + 1) = dn(k, 1);
                    bmat(2, 2 * k) = dn(k, 1);
                    bmat(2, 2 * k + 1) = dn(k, 0);
                }
                ke.noalias() += rule.weights(q) * map.det * bmat.transpose() * c * bmat;
            }
            const int* cell = block.cell(e);
            for (int i = 0; i < ndof; ++i) {
                const int gi = dofs.u_dof(cell[i / 2], i % 2);
                for (int j = 0; j < ndof; ++j)
                    sys.triplets.emplace_back(gi, dofs.u_dof(cell[j / 2], j % 2), ke(i, j));
            }
        }
    }
    return sys;
}

std::array<double, 12> nq2_edge_signs(const Mesh2D& mesh, const ElementBlock& block, int elem) {
    (void)mesh;
    std::array<double, 12> signs;
    signs.fill(1.0);
    const int* cell = block.cell(elem);
    for (int le = 0; le < 4; ++le) {
        const LocalEdge& ed = kQuadEdges[static_cast<size_t>(le)];
        if (cell[ed.c0] > cell[ed.c1]) signs[static_cast<size_t>(2 * le)] = -1.0;
    }
    return signs;
}

SystemMatrix assemble_rmm(const Mesh2D& mesh, const DofMap& dofs, const RmmMaterial& mat) {
    mat.validate();
    if (!dofs.with_p) throw std::invalid_argument("assemble_rmm needs an rmm dofmap");
    const ElementBlock& block = mesh.blocks[0];
    SystemMatrix sys;
    sys.n = dofs.total_dofs();
    sys.rhs = Eigen::VectorXd::Zero(sys.n);

    const QuadratureRule rule = quad_gauss(3);
    std::vector<ScalarShape> shapes;
    std::vector<VectorShape> vshapes;
    for (int q = 0; q < rule.weights.size(); ++q) {
        shapes.push_back(q2_shape(rule.points(q, 0), rule.points(q, 1)));
        vshapes.push_back(nq2_shape(rule.points(q, 0), rule.points(q, 1)));
    }

    const Eigen::Matrix3d ce = mat.c_e.m;
    const Eigen::Matrix3d cm = mat.c_micro.m;
    const double curv = mat.curvature_coeff();

    constexpr int kNu = 18, kNp = 24, kNe = kNu + kNp;
    Eigen::Matrix<double, kNe, kNe> ke;
    Eigen::Matrix<double, 3, kNe> b_rel;   // sym(grad u - P)
    Eigen::Matrix<double, 3, kNe> b_micro; // sym P
    Eigen::Matrix<double, 1, kNe> b_skew;  // skew scalar of (grad u - P)
    Eigen::Matrix<double, 2, kNe> b_curl;  // the two curl components

    for (int e = 0; e < block.count(); ++e) {
        const auto coords = mesh.cell_coords(0, e);
        const auto signs = nq2_edge_signs(mesh, block, e);
        ke.setZero();
        for (int q = 0; q < rule.weights.size(); ++q) {
            const ElementMap map = element_map(shapes[static_cast<size_t>(q)], coords);
            const auto dn = map_gradients(shapes[static_cast<size_t>(q)], map);
            const VectorShape vs = map_covariant(vshapes[static_cast<size_t>(q)], map, signs);
            b_rel.setZero();
            b_micro.setZero();
            b_skew.setZero();
            b_curl.setZero();
            for (int k = 0; k < 9; ++k) {
                const int ux = 2 * k, uy = 2 * k + 1;
                b_rel(0, ux) = dn(k, 0);
                b_rel(1, uy) = dn(k, 1);
                b_rel(2, ux) = dn(k, 1);
                b_rel(2, uy) = dn(k, 0);
                b_skew(0, ux) = 0.5 * dn(k, 1);
                b_skew(0, uy) = -0.5 * dn(k, 0);
            }
            for (int i = 0; i < 12; ++i) {
                const int p0 = kNu + 2 * i, p1 = kNu + 2 * i + 1;  // rows 1 and 2 of P
                // P_11 = psi_x at row0, P_12 = psi_y at row0, etc.
                b_rel(0, p0) -= vs.psi(i, 0);
                b_rel(1, p1) -= vs.psi(i, 1);
                b_rel(2, p0) -= vs.psi(i, 1);
                b_rel(2, p1) -= vs.psi(i, 0);
                b_micro(0, p0) = vs.psi(i, 0);
                b_micro(1, p1) = vs.psi(i, 1);
                b_micro(2, p0) = vs.psi(i, 1);
                b_micro(2, p1) = vs.psi(i, 0);
                b_skew(0, p0) -= 0.5 * vs.psi(i, 1);
                b_skew(0, p1) += 0.5 * vs.psi(i, 0);
                b_curl(0, p0) = vs.curl(i);
                b_curl(1, p1) = vs.curl(i);
            }
            const double w = rule.weights(q) * map.det;
            ke.noalias() += w * b_rel.transpose() * ce * b_rel;
            ke.noalias() += w * b_micro.transpose() * cm * b_micro;
            ke.noalias() += (4.0 * mat.mu_c * w) * b_skew.transpose() * b_skew;
            ke.noalias() += (curv * w) * b_curl.transpose() * b_curl;
        }
        const int* cell = block.cell(e);
        std::array<int, kNe> gdof;
        for (int k = 0; k < 9; ++k) {
            gdof[static_cast<size_t>(2 * k)] = dofs.u_dof(cell[k], 0);
            gdof[static_cast<size_t>(2 * k + 1)] = dofs.u_dof(cell[k], 1);
        }
        for (int i = 0; i < 12; ++i) {
            int loc;
            if (i < 8) {
                const LocalEdge& ed = kQuadEdges[static_cast<size_t>(i / 2)];
                loc = dofs.p_edge_location(mesh.edge_id(cell[ed.c0], cell[ed.c1]), i % 2);
            } else {
                loc = dofs.p_interior_location(e, i - 8);
            }
            gdof[static_cast<size_t>(kNu + 2 * i)] = dofs.p_dof(loc, 0);
            gdof[static_cast<size_t>(kNu + 2 * i + 1)] = dofs.p_dof(loc, 1);
        }
        for (int i = 0; i < kNe; ++i)
            for (int j = 0; j < kNe; ++j)
                sys.triplets.emplace_back(gdof[static_cast<size_t>(i)], gdof[static_cast<size_t>(j)],
                                          ke(i, j));
    }
    return sys;
}

namespace {

struct EdgeGeometry {
    std::array<int, 3> nodes;  // lo corner, hi corner, midside
    int edge;                  // global edge id
};

EdgeGeometry edge_geometry(const Mesh2D& mesh, const BoundaryEdgeRef& ref) {
    EdgeGeometry g;
    g.nodes = mesh.edge_nodes(ref);
    g.edge = mesh.edge_id(g.nodes[0], g.nodes[1]);
    return g;
}

}  // namespace

void add_consistent_coupling_penalty(SystemMatrix& sys, const Mesh2D& mesh, const DofMap& dofs,
                                     const std::string& tag, double kappa1, RowMask mask,
                                     ConstraintSet& cs) {
    if (!dofs.with_p) throw std::invalid_argument("coupling penalty needs an rmm dofmap");
    if (kappa1 < 0.0) throw std::invalid_argument("kappa1 must be >= 0");
    const auto& tagged = mesh.tagged_edges(tag);
    if (tagged.empty()) throw std::runtime_error("tag '" + tag + "' has no boundary edges");
    if (kappa1 == 0.0) return;

    const QuadratureRule rule = line_gauss(3);
    for (const BoundaryEdgeRef& ref : tagged) {
        const EdgeGeometry g = edge_geometry(mesh, ref);
        if (cs.p_essential_edges.count(g.edge))
            throw std::runtime_error("coupling penalty on an edge with essential P values");
        cs.p_penalty_edges.insert(g.edge);

        // local dofs per row r: [u_r at 3 nodes | P-moment dofs of row r]
        std::array<int, 5> gdof_row[2];
        for (int r = 0; r < 2; ++r) {
            for (int k = 0; k < 3; ++k)
                gdof_row[r][static_cast<size_t>(k)] = dofs.u_dof(g.nodes[static_cast<size_t>(k)], r);
            gdof_row[r][3] = dofs.p_dof(dofs.p_edge_location(g.edge, 0), r);
            gdof_row[r][4] = dofs.p_dof(dofs.p_edge_location(g.edge, 1), r);
        }

        Eigen::Matrix<double, 3, 2> coords;
        for (int k = 0; k < 3; ++k)
            coords.row(k) = mesh.nodes[static_cast<size_t>(g.nodes[static_cast<size_t>(k)])].transpose();

        Eigen::Matrix<double, 5, 5> ke = Eigen::Matrix<double, 5, 5>::Zero();
        for (int q = 0; q < rule.weights.size(); ++q) {
            const double s = rule.points(q, 0);
            const ScalarShape sh = line3_shape(s);
            const Eigen::Vector2d xs = coords.transpose() * sh.dN.col(0);  // dx/ds
            const double speed = xs.norm();
            Eigen::Matrix<double, 1, 5> row;
            // (P - grad u) . dx/ds expressed in the edge dofs; dividing by the
            // parametrization speed turns it into the unit-tangent component
            row << -sh.dN(0, 0), -sh.dN(1, 0), -sh.dN(2, 0), 0.5, 1.5 * s;
            ke.noalias() += (rule.weights(q) * kappa1 / speed) * row.transpose() * row;
        }
        for (int r = 0; r < 2; ++r) {
            if (mask == RowMask::x_row && r != 0) continue;
            if (mask == RowMask::y_row && r != 1) continue;
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 5; ++j)
                    sys.triplets.emplace_back(gdof_row[r][static_cast<size_t>(i)],
                                              gdof_row[r][static_cast<size_t>(j)], ke(i, j));
        }
    }
}

double coupling_penalty_energy(const Mesh2D& mesh, const DofMap& dofs, const std::string& tag,
                               double kappa1, RowMask mask, const Eigen::VectorXd& d) {
    if (kappa1 == 0.0) return 0.0;
    const QuadratureRule rule = line_gauss(3);
    double energy = 0.0;
    for (const BoundaryEdgeRef& ref : mesh.tagged_edges(tag)) {
        const EdgeGeometry g = edge_geometry(mesh, ref);
        Eigen::Matrix<double, 3, 2> coords;
        for (int k = 0; k < 3; ++k)
            coords.row(k) = mesh.nodes[static_cast<size_t>(g.nodes[static_cast<size_t>(k)])].transpose();
        for (int q = 0; q < rule.weights.size(); ++q) {
            const double s = rule.points(q, 0);
            const ScalarShape sh = line3_shape(s);
            const double speed = (coords.transpose() * sh.dN.col(0)).norm();
            for (int r = 0; r < 2; ++r) {
                if (mask == RowMask::x_row && r != 0) continue;
                if (mask == RowMask::y_row && r != 1) continue;
                double misfit = 0.5 * d(dofs.p_dof(dofs.p_edge_location(g.edge, 0), r)) +
                                1.5 * s * d(dofs.p_dof(dofs.p_edge_location(g.edge, 1), r));
                for (int k = 0; k < 3; ++k)
                    misfit -= sh.dN(k, 0) * d(dofs.u_dof(g.nodes[static_cast<size_t>(k)], r));
                energy += 0.5 * kappa1 * rule.weights(q) * misfit * misfit / speed;
            }
        }
    }
    return energy;
}

void add_traction(SystemMatrix& sys, const Mesh2D& mesh, const DofMap& dofs,
                  const std::string& tag,
                  const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& traction) {
    const QuadratureRule rule = line_gauss(3);
    for (const BoundaryEdgeRef& ref : mesh.tagged_edges(tag)) {
        const auto nodes = mesh.edge_nodes(ref);
        Eigen::Matrix<double, 3, 2> coords;
        for (int k = 0; k < 3; ++k)
            coords.row(k) = mesh.nodes[static_cast<size_t>(nodes[static_cast<size_t>(k)])].transpose();
        for (int q = 0; q < rule.weights.size(); ++q) {
            const ScalarShape sh = line3_shape(rule.points(q, 0));
            const Eigen::Vector2d x = coords.transpose() * sh.N;
            const Eigen::Vector2d xs = coords.transpose() * sh.dN.col(0);
            const Eigen::Vector2d t = traction(x);
            for (int k = 0; k < 3; ++k)
                for (int c = 0; c < 2; ++c)
                    sys.rhs(dofs.u_dof(nodes[static_cast<size_t>(k)], c)) +=
                        rule.weights(q) * sh.N(k) * t(c) * xs.norm();
        }
    }
}

void apply_dirichlet_u(ConstraintSet& cs, const Mesh2D& mesh, const DofMap& dofs,
                       const std::string& tag,
                       const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& value,
                       bool fix_x, bool fix_y) {
    for (int node : mesh.tag_nodes(tag)) {
        const Eigen::Vector2d v = value(mesh.nodes[static_cast<size_t>(node)]);
        if (fix_x) cs.set_dirichlet(dofs.u_dof(node, 0), v.x());
        if (fix_y) cs.set_dirichlet(dofs.u_dof(node, 1), v.y());
    }
}

void apply_dirichlet_p_tangential(ConstraintSet& cs, const Mesh2D& mesh, const DofMap& dofs,
                                  const std::string& tag,
                                  const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& grad_u,
                                  RowMask mask) {
    if (!dofs.with_p) throw std::invalid_argument("essential P values need an rmm dofmap");
    const QuadratureRule rule = line_gauss(3);
    for (const BoundaryEdgeRef& ref : mesh.tagged_edges(tag)) {
        const EdgeGeometry g = edge_geometry(mesh, ref);
        if (cs.p_penalty_edges.count(g.edge))
            throw std::runtime_error("essential P values on an edge already under penalty");
        cs.p_essential_edges.insert(g.edge);
        Eigen::Matrix<double, 3, 2> coords;
        for (int k = 0; k < 3; ++k)
            coords.row(k) = mesh.nodes[static_cast<size_t>(g.nodes[static_cast<size_t>(k)])].transpose();
        Eigen::Vector2d m0 = Eigen::Vector2d::Zero(), m1 = Eigen::Vector2d::Zero();
        for (int q = 0; q < rule.weights.size(); ++q) {
            const double s = rule.points(q, 0);
            const ScalarShape sh = line3_shape(s);
            const Eigen::Vector2d x = coords.transpose() * sh.N;
            const Eigen::Vector2d xs = coords.transpose() * sh.dN.col(0);
            const Eigen::Vector2d trace = grad_u(x) * xs;  // rows of grad u dotted with dx/ds
            m0 += rule.weights(q) * trace;
            m1 += rule.weights(q) * trace * s;
        }
        for (int r = 0; r < 2; ++r) {
            if (mask == RowMask::x_row && r != 0) continue;
            if (mask == RowMask::y_row && r != 1) continue;
            cs.set_dirichlet(dofs.p_dof(dofs.p_edge_location(g.edge, 0), r), m0(r));
            cs.set_dirichlet(dofs.p_dof(dofs.p_edge_location(g.edge, 1), r), m1(r));
        }
    }
}

void apply_periodic(ConstraintSet& cs, const DofMap& dofs, const PeriodicPairs& pairs,
                    const Eigen::Matrix2d& macro_strain, int pin_node) {
    for (const auto& pair : pairs.pairs) {
        const Eigen::Vector2d jump = macro_strain * pair.offset;
        for (int c = 0; c < 2; ++c) {
            ConstraintSet::Mpc mpc;
            mpc.slave = dofs.u_dof(pair.slave, c);
            mpc.terms = {{dofs.u_dof(pair.master, c), 1.0}};
            mpc.offset = jump(c);
            cs.mpcs.push_back(std::move(mpc));
        }
    }
    if (pin_node >= 0) {
        cs.set_dirichlet(dofs.u_dof(pin_node, 0), 0.0);
        cs.set_dirichlet(dofs.u_dof(pin_node, 1), 0.0);
    }
}

}  // namespace rmfem
