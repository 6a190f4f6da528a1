#include <gtest/gtest.h>

#include "rmfem/assembly.hpp"
#include "rmfem/elements.hpp"
#include "rmfem/mesh.hpp"

using namespace rmfem;

namespace {

// quad9 node coordinates of a straight-sided quad: midsides at edge midpoints,
// center at the corner average (bilinear geometry)
Eigen::Matrix<double, 9, 2> quad9_coords(const Eigen::Matrix<double, 4, 2>& corners) {
    Eigen::Matrix<double, 9, 2> c;
    c.topRows<4>() = corners;
    for (int e = 0; e < 4; ++e)
        c.row(4 + e) = 0.5 * (corners.row(e) + corners.row((e + 1) % 4));
    c.row(8) = 0.25 * corners.colwise().sum();
    return c;
}

const Eigen::Matrix<double, 4, 2> kDistorted = [] {
    Eigen::Matrix<double, 4, 2> c;
    c << 0.0, 0.0, 1.3, 0.1, 1.1, 1.2, -0.2, 0.9;
    return c;
}();

const double kPoints[5][2] = {
    {0.3, -0.7}, {-0.5, 0.2}, {0.9, 0.8}, {-0.8, -0.9}, {0.1, 0.4}};

}  // namespace

TEST(Quadrature, WeightsPositiveAndMeasureExact) {
    for (const QuadratureRule& r : {quad_gauss(2), quad_gauss(3), quad_gauss(5)}) {
        EXPECT_GT(r.weights.minCoeff(), 0.0);
        EXPECT_NEAR(r.weights.sum(), 4.0, 1e-14);
    }
    const QuadratureRule tri = tri_gauss_7();
    EXPECT_GT(tri.weights.minCoeff(), 0.0);
    EXPECT_NEAR(tri.weights.sum(), 0.5, 1e-14);
    EXPECT_NEAR(line_gauss(3).weights.sum(), 2.0, 1e-14);
}

TEST(Q2Shape, KroneckerAtNodes) {
    const auto& nodes = q2_node_coords();
    for (int k = 0; k < 9; ++k) {
        const ScalarShape s = q2_shape(nodes(k, 0), nodes(k, 1));
        for (int j = 0; j < 9; ++j) EXPECT_NEAR(s.N(j), k == j ? 1.0 : 0.0, 1e-14);
    }
}

TEST(Q2Shape, PartitionOfUnity) {
    for (const auto& p : kPoints) {
        const ScalarShape s = q2_shape(p[0], p[1]);
        EXPECT_NEAR(s.N.sum(), 1.0, 1e-14);
        EXPECT_NEAR(s.dN.col(0).sum(), 0.0, 1e-14);
        EXPECT_NEAR(s.dN.col(1).sum(), 0.0, 1e-14);
    }
}

TEST(Q2Shape, ReproducesQuadraticsOnAffineElement) {
    Eigen::Matrix<double, 4, 2> corners;  // parallelogram -> affine map
    corners << 0.2, 0.1, 1.4, 0.5, 1.9, 1.7, 0.7, 1.3;
    const auto coords = quad9_coords(corners);
    auto f = [](const Eigen::Vector2d& x) { return x.x() * x.x() - x.y() * x.y(); };
    Eigen::VectorXd nodal(9);
    for (int k = 0; k < 9; ++k) nodal(k) = f(coords.row(k).transpose());
    const double pts[7][2] = {{0.3, -0.7}, {-0.5, 0.2}, {0.9, 0.8}, {-0.8, -0.9},
                              {0.1, 0.4},  {0.6, -0.2}, {-0.3, 0.75}};
    for (const auto& p : pts) {
        const ScalarShape s = q2_shape(p[0], p[1]);
        const Eigen::Vector2d x = coords.transpose() * s.N;
        EXPECT_NEAR(nodal.dot(s.N), f(x), 1e-12 * std::max(1.0, std::abs(f(x))));
    }
}

TEST(T2Shape, KroneckerAndPartition) {
    const double nodes[6][2] = {{0, 0}, {1, 0}, {0, 1}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}};
    for (int k = 0; k < 6; ++k) {
        const ScalarShape s = t2_shape(nodes[k][0], nodes[k][1]);
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(s.N(j), k == j ? 1.0 : 0.0, 1e-14);
    }
    const ScalarShape s = t2_shape(0.23, 0.41);
    EXPECT_NEAR(s.N.sum(), 1.0, 1e-14);
    EXPECT_NEAR(s.dN.col(0).sum(), 0.0, 1e-14);
    EXPECT_NEAR(s.dN.col(1).sum(), 0.0, 1e-14);
}

TEST(Nq2Shape, DofDuality) {
    for (int j = 0; j < 12; ++j) {
        auto basis_j = [j](double xi, double eta) {
            return Eigen::Vector2d(nq2_shape(xi, eta).psi.row(j));
        };
        const auto dofs = nq2_dofs_of(basis_j);
        for (int i = 0; i < 12; ++i) EXPECT_NEAR(dofs(i), i == j ? 1.0 : 0.0, 1e-12);
    }
}

TEST(Nq2Shape, ConstantFieldInSpan) {
    const auto dofs = nq2_dofs_of([](double, double) { return Eigen::Vector2d(1.0, 0.0); });
    for (const auto& p : kPoints) {
        const VectorShape vs = nq2_shape(p[0], p[1]);
        Eigen::Vector2d value = Eigen::Vector2d::Zero();
        double curl = 0.0;
        for (int i = 0; i < 12; ++i) {
            value += dofs(i) * vs.psi.row(i).transpose();
            curl += dofs(i) * vs.curl(i);
        }
        EXPECT_NEAR(value.x(), 1.0, 1e-12);
        EXPECT_NEAR(value.y(), 0.0, 1e-12);
        EXPECT_NEAR(curl, 0.0, 1e-12);
    }
}

// Gradients of every Q2 function interpolate exactly and curl-free on a
// non-affine quad: the covariant pull-back of grad N_k is its reference
// gradient, which lies in the NQ2 reference space.
TEST(Nq2Shape, GradientInclusionOnDistortedQuad) {
    const auto coords = quad9_coords(kDistorted);
    for (int k = 0; k < 9; ++k) {
        auto pullback = [k](double xi, double eta) {
            return Eigen::Vector2d(q2_shape(xi, eta).dN.row(k));
        };
        const auto dofs = nq2_dofs_of(pullback);
        for (const auto& p : kPoints) {
            const ScalarShape sh = q2_shape(p[0], p[1]);
            const ElementMap map = element_map(sh, coords);
            const VectorShape vs = nq2_shape(p[0], p[1]);
            Eigen::Vector2d ref_val = Eigen::Vector2d::Zero();
            double ref_curl = 0.0;
            for (int i = 0; i < 12; ++i) {
                ref_val += dofs(i) * vs.psi.row(i).transpose();
                ref_curl += dofs(i) * vs.curl(i);
            }
            const Eigen::Vector2d phys = map.inv_transpose * ref_val;
            const Eigen::Vector2d expected = map.inv_transpose * sh.dN.row(k).transpose();
            EXPECT_NEAR((phys - expected).norm(), 0.0, 1e-12);
            EXPECT_NEAR(ref_curl / map.det, 0.0, 1e-12);
        }
    }
}

TEST(MapCovariant, IdentityAndScaling) {
    const VectorShape ref = nq2_shape(0.31, -0.42);
    std::array<double, 12> signs;
    signs.fill(1.0);
    ElementMap id;
    id.jacobian = Eigen::Matrix2d::Identity();
    id.det = 1.0;
    id.inv_transpose = Eigen::Matrix2d::Identity();
    const VectorShape same = map_covariant(ref, id, signs);
    EXPECT_LT((same.psi - ref.psi).norm(), 1e-15);
    EXPECT_LT((same.curl - ref.curl).norm(), 1e-15);

    const double s = 2.5;
    ElementMap scale;
    scale.jacobian = s * Eigen::Matrix2d::Identity();
    scale.det = s * s;
    scale.inv_transpose = (1.0 / s) * Eigen::Matrix2d::Identity();
    const VectorShape scaled = map_covariant(ref, scale, signs);
    EXPECT_LT((scaled.psi - ref.psi / s).norm(), 1e-14);
    EXPECT_LT((scaled.curl - ref.curl / (s * s)).norm(), 1e-14);
}

TEST(MapCovariant, RejectsNegativeJacobian) {
    Eigen::Matrix<double, 4, 2> corners;
    corners << 0, 0, 0, 1, 1, 1, 1, 0;  // clockwise
    EXPECT_THROW(element_map(q2_shape(0, 0), quad9_coords(corners)), std::runtime_error);
}

TEST(Curl2d, ConstantAndRotationFields) {
    const auto coords = quad9_coords(kDistorted);
    std::array<double, 12> signs;
    signs.fill(1.0);

    // row 1 = (-y, x) in physical coordinates, row 2 = constant
    Eigen::Matrix<double, 12, 2> p_dofs;
    auto rotation = [&coords](double xi, double eta) {
        const ScalarShape sh = q2_shape(xi, eta);
        const Eigen::Vector2d x = coords.transpose() * sh.N;
        const ElementMap map = element_map(sh, coords);
        return Eigen::Vector2d(map.jacobian.transpose() * Eigen::Vector2d(-x.y(), x.x()));
    };
    auto constant = [&coords](double xi, double eta) {
        const ElementMap map = element_map(q2_shape(xi, eta), coords);
        return Eigen::Vector2d(map.jacobian.transpose() * Eigen::Vector2d(0.7, -0.3));
    };
    p_dofs.col(0) = nq2_dofs_of(rotation);
    p_dofs.col(1) = nq2_dofs_of(constant);

    for (const auto& p : kPoints) {
        const ElementMap map = element_map(q2_shape(p[0], p[1]), coords);
        const VectorShape vs = map_covariant(nq2_shape(p[0], p[1]), map, signs);
        const Eigen::Vector2d curls = curl2d(p_dofs, vs);
        EXPECT_NEAR(curls(0), 2.0, 1e-10);
        EXPECT_NEAR(curls(1), 0.0, 1e-10);
    }
}

// Two straight-sided quads sharing one edge: every shared-edge basis function
// must have the same tangential trace seen from both elements.
TEST(Nq2Conformity, TangentialContinuityAcrossSharedEdge) {
    Mesh2D mesh;
    // left quad distorted, right quad distorted differently
    Eigen::Matrix<double, 4, 2> left, right;
    left << 0.0, 0.0, 1.0, -0.1, 1.1, 1.2, -0.2, 1.0;
    right << 1.0, -0.1, 2.2, 0.2, 2.0, 1.4, 1.1, 1.2;
    const auto cl = quad9_coords(left);
    const auto cr = quad9_coords(right);
    // node numbering forces opposite local directions on the shared edge
    // shared corners: (1.0,-0.1) and (1.1,1.2); shared midside between them
    std::vector<Eigen::Vector2d> nodes = {
        {0.0, 0.0}, {1.0, -0.1}, {1.1, 1.2}, {-0.2, 1.0},            // left corners 0-3
        cl.row(4).transpose(), cl.row(5).transpose(), cl.row(6).transpose(),
        cl.row(7).transpose(), cl.row(8).transpose(),                 // left mids + center
        {2.2, 0.2}, {2.0, 1.4},                                       // right outer corners
        cr.row(4).transpose(), cr.row(5).transpose(), cr.row(6).transpose(),
        cr.row(8).transpose()};
    mesh.nodes = nodes;
    ElementBlock block;
    block.kind = CellKind::quad9;
    // left: standard order; right: corners (1, 9, 10, 2): its edge 3 runs 2->1
    block.conn = {0, 1, 2, 3, 4, 5, 6, 7, 8,
                  1, 9, 10, 2, 11, 12, 13, 5, 14};
    mesh.blocks.push_back(block);
    mesh.material_id = {0, 0};
    mesh.build_edge_table();

    const int shared = mesh.edge_id(1, 2);
    const auto signs_l = nq2_edge_signs(mesh, mesh.blocks[0], 0);
    const auto signs_r = nq2_edge_signs(mesh, mesh.blocks[0], 1);

    // shared edge is local edge 1 of the left element, local edge 3 of the right
    auto trace = [&](int elem, int local_edge, const std::array<double, 12>& signs, double s,
                     int which_moment) {
        // reference point on the local edge and its tangent
        double xi, eta;
        Eigen::Vector2d t_ref;
        switch (local_edge) {
            case 0: xi = s; eta = -1.0; t_ref = {1.0, 0.0}; break;
            case 1: xi = 1.0; eta = s; t_ref = {0.0, 1.0}; break;
            case 2: xi = -s; eta = 1.0; t_ref = {-1.0, 0.0}; break;
            default: xi = -1.0; eta = -s; t_ref = {0.0, -1.0}; break;
        }
        const auto coords = mesh.cell_coords(0, elem);
        const ScalarShape sh = q2_shape(xi, eta);
        const ElementMap map = element_map(sh, coords);
        const VectorShape vs = map_covariant(nq2_shape(xi, eta), map, signs);
        const int dof = 2 * local_edge + which_moment;
        const Eigen::Vector2d t_phys = (map.jacobian * t_ref).normalized();
        return Eigen::Vector2d(vs.psi.row(dof)).dot(t_phys);
    };

    ASSERT_EQ(shared, mesh.edge_id(2, 1));
    for (int moment = 0; moment < 2; ++moment) {
        for (double s : {-0.6, 0.0, 0.8}) {
            // the same physical point: left edge 1 param s runs node1->node2,
            // right edge 3 param runs node2->node1 (flipped)
            const double tl = trace(0, 1, signs_l, s, moment);
            const double tr = trace(1, 3, signs_r, -s, moment);
            // tangent directions oppose, so the tangential components of the
            // same global basis function differ by the tangent flip only
            EXPECT_NEAR(tl, -tr, 1e-12) << "moment " << moment << " s " << s;
        }
    }
}

// The 3x3 rule integrates every entry of the Q2 and NQ2 element matrices
// exactly on affinely mapped elements.
TEST(Quadrature, ThreeByThreeExactForElementMatrices) {
    Eigen::Matrix<double, 4, 2> corners;  // parallelogram -> affine map
    corners << 0.1, 0.0, 1.2, 0.3, 1.7, 1.4, 0.6, 1.1;
    const auto coords = quad9_coords(corners);
    std::array<double, 12> signs;
    signs.fill(1.0);

    auto element_matrices = [&](int order) {
        const QuadratureRule rule = quad_gauss(order);
        Eigen::MatrixXd kq = Eigen::MatrixXd::Zero(9, 9);    // grad N . grad N
        Eigen::MatrixXd kn = Eigen::MatrixXd::Zero(12, 12);  // psi . psi + curl curl
        for (int q = 0; q < rule.weights.size(); ++q) {
            const ScalarShape sh = q2_shape(rule.points(q, 0), rule.points(q, 1));
            const ElementMap map = element_map(sh, coords);
            const auto dn = map_gradients(sh, map);
            const VectorShape vs = map_covariant(nq2_shape(rule.points(q, 0), rule.points(q, 1)),
                                                 map, signs);
            const double w = rule.weights(q) * map.det;
            kq.noalias() += w * dn * dn.transpose();
            kn.noalias() += w * (vs.psi * vs.psi.transpose() + vs.curl * vs.curl.transpose());
        }
        return std::make_pair(kq, kn);
    };
    const auto [kq3, kn3] = element_matrices(3);
    const auto [kq5, kn5] = element_matrices(5);
    EXPECT_LT((kq3 - kq5).norm(), 1e-12 * kq5.norm());
    EXPECT_LT((kn3 - kn5).norm(), 1e-12 * kn5.norm());
}
