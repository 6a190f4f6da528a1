#include "rmfem/elements.hpp"

#include <cmath>
#include <stdexcept>

namespace rmfem {

namespace {

void gauss_1d(int n, Eigen::VectorXd& pts, Eigen::VectorXd& wts) {
    pts.resize(n);
    wts.resize(n);
    switch (n) {
        case 2: {
            const double p = 1.0 / std::sqrt(3.0);
            pts << -p, p;
            wts << 1.0, 1.0;
            break;
        }
        case 3: {
            const double p = std::sqrt(3.0 / 5.0);
            pts << -p, 0.0, p;
            wts << 5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0;
            break;
        }
        case 5: {
            const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
            const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
            pts << -b, -a, 0.0, a, b;
            wts << wb, wa, 128.0 / 225.0, wa, wb;
            break;
        }
        default:
            throw std::invalid_argument("gauss_1d: unsupported point count");
    }
}

// 1D quadratic Lagrange basis on {-1, 0, +1}.
inline double lag(int node, double t) {
    switch (node) {
        case 0: return 0.5 * t * (t - 1.0);
        case 1: return 1.0 - t * t;
        default: return 0.5 * t * (t + 1.0);
    }
}
inline double dlag(int node, double t) {
    switch (node) {
        case 0: return t - 0.5;
        case 1: return -2.0 * t;
        default: return t + 0.5;
    }
}

}  // namespace

QuadratureRule quad_gauss(int n) {
    Eigen::VectorXd p, w;
    gauss_1d(n, p, w);
    QuadratureRule rule;
    rule.points.resize(n * n, 2);
    rule.weights.resize(n * n);
    int k = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i, ++k) {
            rule.points.row(k) << p(i), p(j);
            rule.weights(k) = w(i) * w(j);
        }
    return rule;
}

QuadratureRule tri_gauss_7() {
    QuadratureRule rule;
    rule.points.resize(7, 2);
    rule.weights.resize(7);
    const double a = 0.059715871789770;
    const double b = 0.470142064105115;
    const double c = 0.797426985353087;
    const double d = 0.101286507323456;
    const double wa = 0.132394152788506;
    const double wb = 0.125939180544827;
    // (lambda1, lambda2) barycentric pairs; weights sum to the reference area 1/2
    rule.points << 1.0 / 3.0, 1.0 / 3.0,
                   b, b,
                   a, b,
                   b, a,
                   d, d,
                   c, d,
                   d, c;
    rule.weights << 0.225, wa, wa, wa, wb, wb, wb;
    rule.weights *= 0.5;
    return rule;
}

QuadratureRule line_gauss(int n) {
    Eigen::VectorXd p, w;
    gauss_1d(n, p, w);
    QuadratureRule rule;
    rule.points.setZero(n, 2);
    rule.points.col(0) = p;
    rule.weights = w;
    return rule;
}

const Eigen::Matrix<double, 9, 2>& q2_node_coords() {
    static const Eigen::Matrix<double, 9, 2> coords = [] {
        Eigen::Matrix<double, 9, 2> c;
        c << -1, -1, 1, -1, 1, 1, -1, 1, 0, -1, 1, 0, 0, 1, -1, 0, 0, 0;
        return c;
    }();
    return coords;
}

ScalarShape q2_shape(double xi, double eta) {
    // 1D node index per coordinate: -1 -> 0, 0 -> 1, +1 -> 2
    static const int ix[9] = {0, 2, 2, 0, 1, 2, 1, 0, 1};
    static const int iy[9] = {0, 0, 2, 2, 0, 1, 2, 1, 1};
    ScalarShape s;
    s.N.resize(9);
    s.dN.resize(9, 2);
    for (int k = 0; k < 9; ++k) {
        s.N(k) = lag(ix[k], xi) * lag(iy[k], eta);
        s.dN(k, 0) = dlag(ix[k], xi) * lag(iy[k], eta);
        s.dN(k, 1) = lag(ix[k], xi) * dlag(iy[k], eta);
    }
    return s;
}

ScalarShape t2_shape(double xi, double eta) {
    ScalarShape s;
    s.N.resize(6);
    s.dN.resize(6, 2);
    const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
    s.N << l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
           4.0 * l0 * l1, 4.0 * l1 * l2, 4.0 * l2 * l0;
    // dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
    s.dN << 1.0 - 4.0 * l0, 1.0 - 4.0 * l0,
            4.0 * l1 - 1.0, 0.0,
            0.0, 4.0 * l2 - 1.0,
            4.0 * (l0 - l1), -4.0 * l1,
            4.0 * l2, 4.0 * l1,
            -4.0 * l2, 4.0 * (l0 - l2);
    return s;
}

ScalarShape line3_shape(double s) {
    ScalarShape sh;
    sh.N.resize(3);
    sh.dN.setZero(3, 2);
    sh.N << 0.5 * s * (s - 1.0), 0.5 * s * (s + 1.0), 1.0 - s * s;
    sh.dN.col(0) << s - 0.5, s + 0.5, -2.0 * s;
    return sh;
}

namespace {

// Monomial basis of Q_{1,2} x Q_{2,1}: entries 0-5 are (m, 0) with
// m in {1, xi, eta, xi*eta, eta^2, xi*eta^2}; entries 6-11 are (0, m) with
// m in {1, xi, eta, xi*eta, xi^2, xi^2*eta}.
Eigen::Vector2d monomial(int k, double xi, double eta) {
    switch (k) {
        case 0: return {1.0, 0.0};
        case 1: return {xi, 0.0};
        case 2: return {eta, 0.0};
        case 3: return {xi * eta, 0.0};
        case 4: return {eta * eta, 0.0};
        case 5: return {xi * eta * eta, 0.0};
        case 6: return {0.0, 1.0};
        case 7: return {0.0, xi};
        case 8: return {0.0, eta};
        case 9: return {0.0, xi * eta};
        case 10: return {0.0, xi * xi};
        default: return {0.0, xi * xi * eta};
    }
}

// curl = d(u2)/dxi - d(u1)/deta
double monomial_curl(int k, double xi, double eta) {
    switch (k) {
        case 0: return 0.0;
        case 1: return 0.0;
        case 2: return -1.0;
        case 3: return -xi;
        case 4: return -2.0 * eta;
        case 5: return -2.0 * xi * eta;
        case 6: return 0.0;
        case 7: return 1.0;
        case 8: return 0.0;
        case 9: return eta;
        case 10: return 2.0 * xi;
        default: return 2.0 * xi * eta;
    }
}

struct RefEdgeGeom {
    Eigen::Vector2d start, dir;  // p(s) = start + s * dir, s in [-1,1]
    Eigen::Vector2d tangent;     // unit local tangent (equals dir here)
};

const std::array<RefEdgeGeom, 4>& ref_edges() {
    static const std::array<RefEdgeGeom, 4> edges = {{
        {{0.0, -1.0}, {1.0, 0.0}, {1.0, 0.0}},
        {{1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}},
        {{0.0, 1.0}, {-1.0, 0.0}, {-1.0, 0.0}},
        {{-1.0, 0.0}, {0.0, -1.0}, {0.0, -1.0}},
    }};
    return edges;
}

Eigen::Matrix<double, 12, 1> apply_ref_dofs(
    const std::function<Eigen::Vector2d(double, double)>& f) {
    Eigen::Matrix<double, 12, 1> vals = Eigen::Matrix<double, 12, 1>::Zero();
    const QuadratureRule line = line_gauss(3);
    for (int e = 0; e < 4; ++e) {
        const RefEdgeGeom& g = ref_edges()[e];
        for (int q = 0; q < line.weights.size(); ++q) {
            const double s = line.points(q, 0);
            const Eigen::Vector2d p = g.start + s * g.dir;
            const double ut = f(p.x(), p.y()).dot(g.tangent);
            vals(2 * e) += line.weights(q) * ut;
            vals(2 * e + 1) += line.weights(q) * ut * s;
        }
    }
    const QuadratureRule area = quad_gauss(3);
    for (int q = 0; q < area.weights.size(); ++q) {
        const double xi = area.points(q, 0), eta = area.points(q, 1);
        const Eigen::Vector2d v = f(xi, eta);
        vals(8) += area.weights(q) * v.x();
        vals(9) += area.weights(q) * v.x() * xi;
        vals(10) += area.weights(q) * v.y();
        vals(11) += area.weights(q) * v.y() * eta;
    }
    return vals;
}

// Coefficients of the dual basis, solved once from dof_i(monomial_k). The
// interior moments pair component 1 with {1, xi} and component 2 with
// {1, eta}; pairing against the other coordinate annihilates the edge-trace
// bubbles xi(eta^2-1), eta(xi^2-1) and loses unisolvence.
const Eigen::Matrix<double, 12, 12>& nq2_coeffs() {
    static const Eigen::Matrix<double, 12, 12> coeffs = [] {
        Eigen::Matrix<double, 12, 12> dof_of_mono;
        for (int k = 0; k < 12; ++k) {
            auto mono = [k](double xi, double eta) { return monomial(k, xi, eta); };
            dof_of_mono.col(k) = apply_ref_dofs(mono);
        }
        Eigen::FullPivLU<Eigen::Matrix<double, 12, 12>> lu(dof_of_mono);
        if (!lu.isInvertible())
            throw std::logic_error("nq2 dof functionals are not unisolvent");
        // row i of the result holds the monomial coefficients of basis i
        return Eigen::Matrix<double, 12, 12>(
            lu.inverse());  // coeff = M^-1 with psi_j = sum_k (M^-1)_{kj} mono_k
    }();
    return coeffs;
}

}  // namespace

VectorShape nq2_shape(double xi, double eta) {
    const Eigen::Matrix<double, 12, 12>& inv = nq2_coeffs();
    VectorShape sh;
    sh.psi.setZero();
    sh.curl.setZero();
    for (int k = 0; k < 12; ++k) {
        const Eigen::Vector2d m = monomial(k, xi, eta);
        const double c = monomial_curl(k, xi, eta);
        for (int j = 0; j < 12; ++j) {
            const double w = inv(k, j);  // coefficient of monomial k in basis j
            sh.psi(j, 0) += w * m.x();
            sh.psi(j, 1) += w * m.y();
            sh.curl(j) += w * c;
        }
    }
    return sh;
}

Eigen::Matrix<double, 12, 1> nq2_dofs_of(
    const std::function<Eigen::Vector2d(double, double)>& f) {
    return apply_ref_dofs(f);
}

ElementMap element_map(const ScalarShape& shape,
                       const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords) {
    ElementMap m;
    m.jacobian = coords.transpose() * shape.dN;  // J_ij = dx_i/dxi_j
    m.det = m.jacobian.determinant();
    if (!(m.det > 0.0)) throw std::runtime_error("element_map: non-positive Jacobian determinant");
    m.inv_transpose = m.jacobian.inverse().transpose();
    return m;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> map_gradients(const ScalarShape& shape,
                                                       const ElementMap& map) {
    return shape.dN * map.inv_transpose.transpose();
}

VectorShape map_covariant(const VectorShape& ref, const ElementMap& map,
                          const std::array<double, 12>& signs) {
    VectorShape out;
    out.psi = ref.psi * map.inv_transpose.transpose();
    out.curl = ref.curl / map.det;
    for (int i = 0; i < 12; ++i) {
        out.psi.row(i) *= signs[i];
        out.curl(i) *= signs[i];
    }
    return out;
}

Eigen::Vector2d curl2d(const Eigen::Matrix<double, 12, 2>& p_dofs, const VectorShape& mapped) {
    return p_dofs.transpose() * mapped.curl;
}

}  // namespace rmfem
