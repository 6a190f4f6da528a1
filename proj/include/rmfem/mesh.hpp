#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rmfem/elements.hpp"

// Deterministic generation of structured quad9 grids, tri6 unit-cell meshes
// with a circular soft inclusion, tiled metamaterial beams, boundary tagging,
// and periodic node pairing. Meshes are immutable after construction and safe
// to share read-only across threads.

namespace rmfem {

enum class CellKind { quad9, tri6, line3 };

inline int nodes_per_cell(CellKind k) {
    switch (k) {
        case CellKind::quad9: return 9;
        case CellKind::tri6: return 6;
        default: return 3;
    }
}
inline int edges_per_cell(CellKind k) { return k == CellKind::quad9 ? 4 : (k == CellKind::tri6 ? 3 : 0); }

LocalEdge local_edge(CellKind kind, int e);

struct ElementBlock {
    CellKind kind;
    std::vector<int> conn;  // flat connectivity, stride nodes_per_cell(kind)
    int count() const { return static_cast<int>(conn.size()) / nodes_per_cell(kind); }
    const int* cell(int e) const { return conn.data() + static_cast<size_t>(e) * nodes_per_cell(kind); }
};

struct BoundaryEdgeRef {
    int block;
    int elem;
    int local_edge;
};

// Undirected mesh edge between corner nodes; canonical orientation runs from
// the lower to the higher global node index, so both adjacent elements derive
// the same direction.
struct MeshEdge {
    int a, b;      // a < b
    int adjacency; // number of adjacent area elements
};

struct Mesh2D {
    std::vector<Eigen::Vector2d> nodes;
    std::vector<ElementBlock> blocks;                 // area element blocks
    std::vector<int> material_id;                     // per area element, block-major
    std::map<std::string, std::vector<BoundaryEdgeRef>> boundary_tags;

    std::vector<MeshEdge> edges;                      // unique corner-to-corner edges
    std::unordered_map<std::int64_t, int> edge_index; // key = a * n_nodes + b

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_elements() const;
    int element_offset(int block) const;              // global element id of block start

    void build_edge_table();                          // validates 1- or 2-manifold adjacency
    int edge_id(int na, int nb) const;

    // Global node ids of a tagged edge, ordered (low corner, high corner, midside)
    // per the canonical edge direction.
    std::array<int, 3> edge_nodes(const BoundaryEdgeRef& ref) const;
    std::vector<int> tag_nodes(const std::string& tag) const; // unique, sorted
    const std::vector<BoundaryEdgeRef>& tagged_edges(const std::string& tag) const;

    Eigen::Matrix<double, Eigen::Dynamic, 2> cell_coords(int block, int elem) const;
    double element_area(int block, int elem) const;
    double total_area() const;
    double area_of_material(int mat) const;
};

Mesh2D build_structured_quad_grid(double width, double height, int nx, int ny,
                                  const Eigen::Vector2d& origin = Eigen::Vector2d::Zero());

// Square metamaterial unit cell with one circular inclusion, meshed with tri6
// elements conforming to a polygonal approximation of the circle with
// 16 * refinement segments. Variants follow the four cubic-symmetric windows
// of the same lattice:
//   1: axis-aligned cell, centered inclusion
//   2: axis-aligned cell, quarter inclusions at the four corners
//   3: 45-degree rotated cell (edge sqrt(2) l), centered inclusion plus
//      quarter inclusions at the cell corners
//   4: 45-degree rotated cell, half inclusions at the four edge midpoints
// All variants are centered at the origin and share the inclusion volume
// fraction of variant 1.
struct UnitCellSpec {
    double l = 1.9e-2;     // cell edge length, m
    double d = 1.2e-2;     // inclusion diameter, m
    int variant = 1;
    int refinement = 2;
};

Mesh2D build_unit_cell_mesh(const UnitCellSpec& spec);

// H x L = (n l) x (12 n l) beam tiled from variant-1 cells; x in [0, 12 n l],
// y centered about the beam axis. Shared interface nodes are merged.
Mesh2D build_beam_mesh(int n, const UnitCellSpec& spec);

// nx x ny block of variant-1 cells centered at the origin.
Mesh2D build_cell_cluster(int nx, int ny, const UnitCellSpec& spec);

struct PeriodicPairs {
    struct Pair {
        int master, slave;
        Eigen::Vector2d offset;  // x_slave - x_master
    };
    std::vector<Pair> pairs;
};

// left<->right and bottom<->top node pairing of an axis-aligned rectangular
// mesh; the three non-master corners are slaved to the bottom-left corner.
// Throws naming the offending node if a boundary node has no partner.
PeriodicPairs build_periodic_pairs(const Mesh2D& mesh);

double min_node_distance(const Mesh2D& mesh);

}  // namespace rmfem
