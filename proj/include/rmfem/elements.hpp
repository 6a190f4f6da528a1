#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>

// Reference elements, quadrature, and mappings: Q2 Lagrange (quad9), T2
// Lagrange (tri6), quadratic line elements, and the first-kind second-order
// Nedelec element on quads (NQ2, 12 vector dofs).

namespace rmfem {

struct QuadratureRule {
    Eigen::Matrix<double, Eigen::Dynamic, 2> points;  // reference coordinates
    Eigen::VectorXd weights;                          // reference measure
};

// n x n tensor Gauss rule on [-1,1]^2 (n in {2,3,5}).
QuadratureRule quad_gauss(int n);
// Degree-5 7-point rule on the reference triangle (0,0)-(1,0)-(0,1).
QuadratureRule tri_gauss_7();
// n-point Gauss rule on [-1,1] (n in {2,3,5}); points stored in column 0.
QuadratureRule line_gauss(int n);

// Scalar shape values and reference gradients at one reference point.
struct ScalarShape {
    Eigen::VectorXd N;
    Eigen::Matrix<double, Eigen::Dynamic, 2> dN;  // d/dxi, d/deta
};

ScalarShape q2_shape(double xi, double eta);    // 9 biquadratic Lagrange functions
ScalarShape t2_shape(double xi, double eta);    // 6 quadratic triangle functions
ScalarShape line3_shape(double s);              // 3 quadratic line functions, nodes (-1, +1, 0)

// Reference coordinates of the quad9 nodes, matching q2_shape ordering:
// corners, edge midpoints, center.
const Eigen::Matrix<double, 9, 2>& q2_node_coords();

// Vector-valued shape functions of the NQ2 element with reference curls.
struct VectorShape {
    Eigen::Matrix<double, 12, 2> psi;
    Eigen::Matrix<double, 12, 1> curl;
};

// Basis of Q_{1,2} x Q_{2,1} dual to the 12 dof functionals: per edge the
// tangential moments against {1, s}, plus the four interior moments
// int u1, int u1*xi, int u2, int u2*eta.
VectorShape nq2_shape(double xi, double eta);

// Applies the 12 reference dof functionals to an arbitrary vector field;
// nq2-interpolation of f has exactly these coefficients.
Eigen::Matrix<double, 12, 1> nq2_dofs_of(
    const std::function<Eigen::Vector2d(double, double)>& f);

// Local edge topology: corner node ids and midside node id.
struct LocalEdge {
    int c0, c1, mid;
};
inline constexpr std::array<LocalEdge, 4> kQuadEdges{{{0, 1, 4}, {1, 2, 5}, {2, 3, 6}, {3, 0, 7}}};
inline constexpr std::array<LocalEdge, 3> kTriEdges{{{0, 1, 3}, {1, 2, 4}, {2, 0, 5}}};

struct ElementMap {
    Eigen::Matrix2d jacobian;
    double det = 0.0;
    Eigen::Matrix2d inv_transpose;
};

// Geometry map at one reference point from shape gradients and node
// coordinates (rows of `coords`). Throws on non-positive determinant.
ElementMap element_map(const ScalarShape& shape,
                       const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords);

// Physical gradients dN * J^-1, one row per basis function.
Eigen::Matrix<double, Eigen::Dynamic, 2> map_gradients(const ScalarShape& shape,
                                                       const ElementMap& map);

// Covariant transform: vectors J^-T * psi, curls curl/detJ, with per-dof
// orientation signs matching the canonical global edge directions.
VectorShape map_covariant(const VectorShape& ref, const ElementMap& map,
                          const std::array<double, 12>& signs);

// The two out-of-plane curl components (P_{12,1}-P_{11,2}, P_{22,1}-P_{21,2})
// of the interpolated micro-distortion; p_dofs(I, r) is row r of dof I.
Eigen::Vector2d curl2d(const Eigen::Matrix<double, 12, 2>& p_dofs, const VectorShape& mapped);

}  // namespace rmfem
