#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "rmfem/mesh.hpp"
#include "rmfem/vtk.hpp"

using namespace rmfem;

namespace {

const UnitCellSpec kCell{1.9e-2, 1.2e-2, 1, 2};

// multiset of quantized element centroids with material ids
std::multiset<std::tuple<long, long, int>> centroid_signature(const Mesh2D& mesh, double scale,
                                                              bool mirror_x, bool mirror_y) {
    std::multiset<std::tuple<long, long, int>> sig;
    for (int b = 0; b < static_cast<int>(mesh.blocks.size()); ++b) {
        const ElementBlock& block = mesh.blocks[static_cast<size_t>(b)];
        const int off = mesh.element_offset(b);
        for (int e = 0; e < block.count(); ++e) {
            Eigen::Vector2d c = Eigen::Vector2d::Zero();
            for (int k = 0; k < 3; ++k) c += mesh.nodes[static_cast<size_t>(block.cell(e)[k])];
            c /= 3.0;
            if (mirror_x) c.x() = -c.x();
            if (mirror_y) c.y() = -c.y();
            sig.insert({std::lround(c.x() / scale), std::lround(c.y() / scale),
                        mesh.material_id[static_cast<size_t>(off + e)]});
        }
    }
    return sig;
}

}  // namespace

TEST(StructuredGrid, SingleElement) {
    const Mesh2D m = build_structured_quad_grid(1.0, 1.0, 1, 1);
    EXPECT_EQ(m.n_elements(), 1);
    EXPECT_EQ(m.n_nodes(), 9);
    EXPECT_EQ(m.tagged_edges("boundary").size(), 4u);
    EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
}

TEST(StructuredGrid, BeamGridCounts) {
    const double l = kCell.l;
    const Mesh2D m = build_structured_quad_grid(24.0 * l, 2.0 * l, 48, 4);
    EXPECT_EQ(m.n_elements(), 192);
    EXPECT_EQ(m.n_nodes(), 873);  // (2*48+1)*(2*4+1)
    EXPECT_NEAR(m.total_area(), 48.0 * l * l, 1e-12 * 48.0 * l * l);
    EXPECT_EQ(m.tagged_edges("left").size(), 4u);
    EXPECT_EQ(m.tagged_edges("top").size(), 48u);
}

TEST(StructuredGrid, RejectsBadArguments) {
    EXPECT_THROW(build_structured_quad_grid(-1.0, 1.0, 2, 2), std::invalid_argument);
    EXPECT_THROW(build_structured_quad_grid(1.0, 1.0, 0, 2), std::invalid_argument);
}

TEST(UnitCell, InclusionAreaFractionConverges) {
    const double exact = M_PI * kCell.d * kCell.d / (4.0 * kCell.l * kCell.l);
    double prev_err = 1.0;
    for (int ref : {1, 2, 4}) {
        UnitCellSpec spec = kCell;
        spec.refinement = ref;
        const Mesh2D m = build_unit_cell_mesh(spec);
        EXPECT_NEAR(m.total_area(), kCell.l * kCell.l, 1e-10 * kCell.l * kCell.l);
        const double frac = m.area_of_material(1) / m.total_area();
        const double err = std::abs(frac - exact) / exact;
        EXPECT_LT(err, prev_err);
        prev_err = err;
        if (ref == 4) {
            EXPECT_LT(err, 0.01);
        }
    }
    EXPECT_NEAR(exact, 0.3133, 5e-4);
}

TEST(UnitCell, MirrorSymmetry) {
    const Mesh2D m = build_unit_cell_mesh(kCell);
    const double scale = 1e-9 * kCell.l;
    const auto plain = centroid_signature(m, scale, false, false);
    EXPECT_EQ(plain, centroid_signature(m, scale, true, false));
    EXPECT_EQ(plain, centroid_signature(m, scale, false, true));
}

TEST(UnitCell, VariantGeometry) {
    const Mesh2D base = build_unit_cell_mesh(kCell);
    const double frac_base = base.area_of_material(1) / base.total_area();
    for (int v : {2, 3, 4}) {
        UnitCellSpec spec = kCell;
        spec.variant = v;
        const Mesh2D m = build_unit_cell_mesh(spec);
        const double area = v <= 2 ? kCell.l * kCell.l : 2.0 * kCell.l * kCell.l;
        EXPECT_NEAR(m.total_area(), area, 1e-9 * area) << "variant " << v;
        // all variants are windows of the same lattice
        const double frac = m.area_of_material(1) / m.total_area();
        EXPECT_NEAR(frac, frac_base, 1e-9) << "variant " << v;
        EXPECT_GT(min_node_distance(m), 1e-10 * kCell.l);
    }
}

TEST(UnitCell, RejectsDegenerateGeometry) {
    UnitCellSpec bad = kCell;
    bad.d = kCell.l;
    EXPECT_THROW(build_unit_cell_mesh(bad), std::invalid_argument);
    bad = kCell;
    bad.refinement = 0;
    EXPECT_THROW(build_unit_cell_mesh(bad), std::invalid_argument);
}

TEST(UnitCell, DeterministicRebuild) {
    const Mesh2D a = build_unit_cell_mesh(kCell);
    const Mesh2D b = build_unit_cell_mesh(kCell);
    ASSERT_EQ(a.n_nodes(), b.n_nodes());
    for (int i = 0; i < a.n_nodes(); ++i)
        EXPECT_EQ(a.nodes[static_cast<size_t>(i)], b.nodes[static_cast<size_t>(i)]);
    EXPECT_EQ(a.blocks[0].conn, b.blocks[0].conn);
}

TEST(UnitCell, EdgeAdjacencyIsManifold) {
    const Mesh2D m = build_unit_cell_mesh(kCell);
    int boundary = 0;
    for (const MeshEdge& e : m.edges) {
        EXPECT_GE(e.adjacency, 1);
        EXPECT_LE(e.adjacency, 2);
        if (e.adjacency == 1) ++boundary;
    }
    EXPECT_EQ(boundary, static_cast<int>(m.tagged_edges("boundary").size()));
}

TEST(BeamMesh, TilingGeometry) {
    const Mesh2D m1 = build_beam_mesh(1, kCell);
    EXPECT_NEAR(m1.total_area(), 12.0 * kCell.l * kCell.l, 1e-9 * kCell.l * kCell.l);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : m1.nodes) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    EXPECT_NEAR(xmax - xmin, 12.0 * kCell.l, 1e-12);
    EXPECT_NEAR(ymax - ymin, kCell.l, 1e-12);
    EXPECT_NEAR(ymin, -0.5 * kCell.l, 1e-12);

    const Mesh2D m2 = build_beam_mesh(2, kCell);
    EXPECT_NEAR(m2.total_area(), 48.0 * kCell.l * kCell.l, 2e-9 * kCell.l * kCell.l);
    EXPECT_GT(min_node_distance(m2), 1e-10 * kCell.l);

    const Mesh2D cl = build_cell_cluster(2, 2, kCell);
    EXPECT_NEAR(cl.total_area(), 4.0 * kCell.l * kCell.l, 1e-9 * kCell.l * kCell.l);
}

TEST(PeriodicPairs, StructuredGridExactOffsets) {
    const Mesh2D m = build_structured_quad_grid(2.0, 1.0, 2, 2);
    const PeriodicPairs pairs = build_periodic_pairs(m);
    // 5 nodes per side: 3 interior pairs per direction + 3 corner pairs
    EXPECT_EQ(pairs.pairs.size(), 9u);
    for (const auto& p : pairs.pairs) {
        const Eigen::Vector2d d =
            m.nodes[static_cast<size_t>(p.slave)] - m.nodes[static_cast<size_t>(p.master)];
        EXPECT_LT((d - p.offset).norm(), 1e-12);
        EXPECT_TRUE((std::abs(p.offset.x() - 2.0) < 1e-12 || std::abs(p.offset.x()) < 1e-12));
    }
}

TEST(PeriodicPairs, UnitCellFullyPaired) {
    const Mesh2D m = build_unit_cell_mesh(kCell);
    const PeriodicPairs pairs = build_periodic_pairs(m);
    std::set<int> covered;
    for (const auto& p : pairs.pairs) {
        covered.insert(p.master);
        covered.insert(p.slave);
    }
    const std::vector<int> boundary = m.tag_nodes("boundary");
    for (int n : boundary) EXPECT_TRUE(covered.count(n)) << "node " << n;
}

TEST(PeriodicPairs, PerturbedNodeFails) {
    Mesh2D m = build_structured_quad_grid(1.0, 1.0, 2, 2);
    // nudge one non-corner right-edge node
    for (auto& p : m.nodes)
        if (std::abs(p.x() - 1.0) < 1e-12 && std::abs(p.y() - 0.25) < 1e-12) p.y() += 1e-4;
    EXPECT_THROW(build_periodic_pairs(m), std::runtime_error);
}

TEST(Vtk, LegacyAsciiExport) {
    const Mesh2D m = build_unit_cell_mesh({1.9e-2, 1.2e-2, 1, 1});
    const std::string path = "test_mesh_export.vtk";
    write_vtk(m, path);
    std::ifstream in(path);
    ASSERT_TRUE(in.good());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# vtk DataFile Version 3.0");
    int points = -1, cells = -1;
    while (std::getline(in, line)) {
        if (line.rfind("POINTS", 0) == 0) points = std::stoi(line.substr(7));
        if (line.rfind("CELLS", 0) == 0) cells = std::stoi(line.substr(6));
    }
    EXPECT_EQ(points, m.n_nodes());
    EXPECT_EQ(cells, m.n_elements());
    std::remove(path.c_str());
}
