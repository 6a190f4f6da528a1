#include "rmfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rmfem {

LocalEdge local_edge(CellKind kind, int e) {
    if (kind == CellKind::quad9) return kQuadEdges.at(static_cast<size_t>(e));
    if (kind == CellKind::tri6) return kTriEdges.at(static_cast<size_t>(e));
    throw std::invalid_argument("local_edge: line elements have no edges");
}

int Mesh2D::n_elements() const {
    int n = 0;
    for (const ElementBlock& b : blocks) n += b.count();
    return n;
}

int Mesh2D::element_offset(int block) const {
    int n = 0;
    for (int b = 0; b < block; ++b) n += blocks[b].count();
    return n;
}

void Mesh2D::build_edge_table() {
    edges.clear();
    edge_index.clear();
    const std::int64_t nn = n_nodes();
    for (const ElementBlock& block : blocks)
        for (int id : block.conn)
            if (id < 0 || id >= nn)
                throw std::runtime_error("connectivity index out of range");
    for (const ElementBlock& block : blocks) {
        for (int e = 0; e < block.count(); ++e) {
            const int* c = block.cell(e);
            for (int le = 0; le < edges_per_cell(block.kind); ++le) {
                const LocalEdge& ed = local_edge(block.kind, le);
                const int a = std::min(c[ed.c0], c[ed.c1]);
                const int b = std::max(c[ed.c0], c[ed.c1]);
                const std::int64_t key = a * nn + b;
                auto it = edge_index.find(key);
                if (it == edge_index.end()) {
                    edge_index.emplace(key, static_cast<int>(edges.size()));
                    edges.push_back({a, b, 1});
                } else {
                    edges[it->second].adjacency += 1;
                }
            }
        }
    }
    for (const MeshEdge& e : edges)
        if (e.adjacency > 2)
            throw std::runtime_error("mesh edge shared by more than two area elements");
}

int Mesh2D::edge_id(int na, int nb) const {
    const std::int64_t nn = n_nodes();
    const std::int64_t key = static_cast<std::int64_t>(std::min(na, nb)) * nn + std::max(na, nb);
    auto it = edge_index.find(key);
    if (it == edge_index.end()) throw std::runtime_error("edge_id: edge not in table");
    return it->second;
}

std::array<int, 3> Mesh2D::edge_nodes(const BoundaryEdgeRef& ref) const {
    const ElementBlock& block = blocks.at(static_cast<size_t>(ref.block));
    const int* c = block.cell(ref.elem);
    const LocalEdge& ed = local_edge(block.kind, ref.local_edge);
    int a = c[ed.c0], b = c[ed.c1];
    if (a > b) std::swap(a, b);
    return {a, b, c[ed.mid]};
}

std::vector<int> Mesh2D::tag_nodes(const std::string& tag) const {
    std::set<int> ids;
    for (const BoundaryEdgeRef& ref : tagged_edges(tag)) {
        const auto n = edge_nodes(ref);
        ids.insert(n.begin(), n.end());
    }
    return {ids.begin(), ids.end()};
}

const std::vector<BoundaryEdgeRef>& Mesh2D::tagged_edges(const std::string& tag) const {
    auto it = boundary_tags.find(tag);
    if (it == boundary_tags.end())
        throw std::runtime_error("unknown boundary tag '" + tag + "'");
    return it->second;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> Mesh2D::cell_coords(int block, int elem) const {
    const ElementBlock& b = blocks.at(static_cast<size_t>(block));
    const int npc = nodes_per_cell(b.kind);
    Eigen::Matrix<double, Eigen::Dynamic, 2> coords(npc, 2);
    const int* c = b.cell(elem);
    for (int k = 0; k < npc; ++k) coords.row(k) = nodes[static_cast<size_t>(c[k])].transpose();
    return coords;
}

double Mesh2D::element_area(int block, int elem) const {
    const ElementBlock& b = blocks.at(static_cast<size_t>(block));
    const auto coords = cell_coords(block, elem);
    const QuadratureRule rule = (b.kind == CellKind::quad9) ? quad_gauss(3) : tri_gauss_7();
    double area = 0.0;
    for (int q = 0; q < rule.weights.size(); ++q) {
        const ScalarShape sh = (b.kind == CellKind::quad9)
                                   ? q2_shape(rule.points(q, 0), rule.points(q, 1))
                                   : t2_shape(rule.points(q, 0), rule.points(q, 1));
        area += rule.weights(q) * element_map(sh, coords).det;
    }
    return area;
}

double Mesh2D::total_area() const {
    double a = 0.0;
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
        for (int e = 0; e < blocks[static_cast<size_t>(b)].count(); ++e) a += element_area(b, e);
    return a;
}

double Mesh2D::area_of_material(int mat) const {
    double a = 0.0;
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
        const int off = element_offset(b);
        for (int e = 0; e < blocks[static_cast<size_t>(b)].count(); ++e)
            if (material_id[static_cast<size_t>(off + e)] == mat) a += element_area(b, e);
    }
    return a;
}

// ---------------------------------------------------------------------------
// structured quad9 grid
// ---------------------------------------------------------------------------

Mesh2D build_structured_quad_grid(double width, double height, int nx, int ny,
                                  const Eigen::Vector2d& origin) {
    if (width <= 0.0 || height <= 0.0) throw std::invalid_argument("grid dimensions must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid subdivision must be >= 1");
    Mesh2D mesh;
    const int mx = 2 * nx + 1, my = 2 * ny + 1;
    mesh.nodes.reserve(static_cast<size_t>(mx) * my);
    for (int j = 0; j < my; ++j)
        for (int i = 0; i < mx; ++i)
            mesh.nodes.emplace_back(origin.x() + width * i / (2.0 * nx),
                                    origin.y() + height * j / (2.0 * ny));
    auto id = [mx](int i, int j) { return j * mx + i; };
    ElementBlock block;
    block.kind = CellKind::quad9;
    block.conn.reserve(static_cast<size_t>(nx) * ny * 9);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int I = 2 * i, J = 2 * j;
            const int cell[9] = {id(I, J),     id(I + 2, J),     id(I + 2, J + 2),
                                 id(I, J + 2), id(I + 1, J),     id(I + 2, J + 1),
                                 id(I + 1, J + 2), id(I, J + 1), id(I + 1, J + 1)};
            block.conn.insert(block.conn.end(), cell, cell + 9);
        }
    mesh.blocks.push_back(std::move(block));
    mesh.material_id.assign(static_cast<size_t>(nx) * ny, 0);
    auto elem = [nx](int i, int j) { return j * nx + i; };
    auto& tags = mesh.boundary_tags;
    for (int i = 0; i < nx; ++i) {
        tags["bottom"].push_back({0, elem(i, 0), 0});
        tags["top"].push_back({0, elem(i, ny - 1), 2});
    }
    for (int j = 0; j < ny; ++j) {
        tags["right"].push_back({0, elem(nx - 1, j), 1});
        tags["left"].push_back({0, elem(0, j), 3});
    }
    for (const char* side : {"bottom", "right", "top", "left"})
        for (const BoundaryEdgeRef& r : tags[side]) tags["boundary"].push_back(r);
    mesh.build_edge_table();
    return mesh;
}

// ---------------------------------------------------------------------------
// unit cell meshing
// ---------------------------------------------------------------------------

namespace {

struct TriMeshLin {
    std::vector<Eigen::Vector2d> v;
    std::vector<std::array<int, 3>> tri;
    std::vector<int> mat;
};

// Index remap that merges vertices closer than tol. Neighbor cells of the
// hash grid are probed with integer offsets; shifting the coordinate by +-tol
// before flooring loses the neighbor at quotients near 2^52.
std::vector<int> merge_map(const std::vector<Eigen::Vector2d>& pts, double tol) {
    std::unordered_map<std::int64_t, std::vector<int>> grid;
    auto cell_of = [tol](double v) { return static_cast<std::int64_t>(std::floor(v / tol)); };
    auto key = [](std::int64_t ix, std::int64_t iy) { return ix * 73856093LL ^ iy * 19349663LL; };
    std::vector<int> remap(pts.size(), -1);
    std::vector<int> kept;  // representative index (into kept order)
    for (size_t p = 0; p < pts.size(); ++p) {
        const std::int64_t ix = cell_of(pts[p].x()), iy = cell_of(pts[p].y());
        int found = -1;
        for (std::int64_t dx = -1; dx <= 1 && found < 0; ++dx)
            for (std::int64_t dy = -1; dy <= 1 && found < 0; ++dy) {
                auto it = grid.find(key(ix + dx, iy + dy));
                if (it == grid.end()) continue;
                for (int q : it->second)
                    if ((pts[p] - pts[static_cast<size_t>(q)]).norm() <= tol) {
                        found = q;
                        break;
                    }
            }
        if (found >= 0) {
            remap[p] = remap[static_cast<size_t>(found)];
        } else {
            remap[p] = static_cast<int>(kept.size());
            kept.push_back(static_cast<int>(p));
            grid[key(ix, iy)].push_back(static_cast<int>(p));
        }
    }
    return remap;
}

void compact(TriMeshLin& m, double tol) {
    const std::vector<int> remap = merge_map(m.v, tol);
    int n_kept = 0;
    for (int r : remap) n_kept = std::max(n_kept, r + 1);
    std::vector<Eigen::Vector2d> nv(static_cast<size_t>(n_kept));
    for (size_t p = 0; p < m.v.size(); ++p) nv[static_cast<size_t>(remap[p])] = m.v[p];
    m.v = std::move(nv);
    for (auto& t : m.tri)
        for (int& id : t) id = remap[static_cast<size_t>(id)];

    // drop vertices left unreferenced by the region filters
    std::vector<int> order(m.v.size(), -1);
    int next = 0;
    for (auto& t : m.tri)
        for (int& id : t) {
            if (order[static_cast<size_t>(id)] < 0) order[static_cast<size_t>(id)] = next++;
            id = order[static_cast<size_t>(id)];
        }
    std::vector<Eigen::Vector2d> used(static_cast<size_t>(next));
    for (size_t p = 0; p < m.v.size(); ++p)
        if (order[p] >= 0) used[static_cast<size_t>(order[p])] = m.v[p];
    m.v = std::move(used);
}

void append(TriMeshLin& dst, const TriMeshLin& src, const Eigen::Vector2d& shift) {
    const int base = static_cast<int>(dst.v.size());
    for (const auto& p : src.v) dst.v.push_back(p + shift);
    for (size_t t = 0; t < src.tri.size(); ++t) {
        dst.tri.push_back({src.tri[t][0] + base, src.tri[t][1] + base, src.tri[t][2] + base});
        dst.mat.push_back(src.mat[t]);
    }
}

// Keeps only triangles whose centroid satisfies the predicate.
TriMeshLin filter(const TriMeshLin& m, const std::function<bool(const Eigen::Vector2d&)>& keep) {
    TriMeshLin out;
    out.v = m.v;
    for (size_t t = 0; t < m.tri.size(); ++t) {
        const Eigen::Vector2d c =
            (m.v[static_cast<size_t>(m.tri[t][0])] + m.v[static_cast<size_t>(m.tri[t][1])] +
             m.v[static_cast<size_t>(m.tri[t][2])]) / 3.0;
        if (keep(c)) {
            out.tri.push_back(m.tri[t]);
            out.mat.push_back(m.mat[t]);
        }
    }
    return out;
}

// Butterfly mesh of the variant-1 cell, centered at the origin: a core square
// inside the inclusion, a layer out to the polygonal circle, and a layer out
// to the cell boundary. Rays at every multiple of 45 degrees are mesh lines,
// so the cell can be cut along its axes and diagonals to assemble the other
// window variants.
TriMeshLin unit_cell_variant1_lin(double l, double r, int refinement) {
    const int M = 16 * refinement;  // circle segments
    const int m = M / 8;            // segments per core-square half-side
    const double a = 0.5 * r;       // core square half-width
    TriMeshLin mesh;

    // core square grid
    const int stride = 2 * m + 1;
    auto core_id = [stride](int i, int j) { return j * stride + i; };
    for (int j = 0; j <= 2 * m; ++j)
        for (int i = 0; i <= 2 * m; ++i)
            mesh.v.emplace_back(-a + a * i / m, -a + a * j / m);
    for (int j = 0; j < 2 * m; ++j)
        for (int i = 0; i < 2 * m; ++i) {
            const int bl = core_id(i, j), br = core_id(i + 1, j);
            const int tr = core_id(i + 1, j + 1), tl = core_id(i, j + 1);
            const double cx = -a + a * (i + 0.5) / m, cy = -a + a * (j + 0.5) / m;
            if (cx * cy >= 0.0) {  // keep the main diagonals as mesh lines
                mesh.tri.push_back({bl, br, tr});
                mesh.tri.push_back({bl, tr, tl});
            } else {
                mesh.tri.push_back({bl, br, tl});
                mesh.tri.push_back({br, tr, tl});
            }
            mesh.mat.push_back(1);
            mesh.mat.push_back(1);
        }

    // core perimeter, counter-clockwise from (a, 0); entry k faces angle 2 pi k / M
    std::vector<int> ring(static_cast<size_t>(M));
    for (int k = 0; k < M; ++k) {
        int i, j;
        if (k <= m) { i = 2 * m; j = m + k; }
        else if (k <= 3 * m) { i = 2 * m - (k - m); j = 2 * m; }
        else if (k <= 5 * m) { i = 0; j = 2 * m - (k - 3 * m); }
        else if (k <= 7 * m) { i = k - 5 * m; j = 0; }
        else { i = 2 * m; j = k - 7 * m; }
        ring[static_cast<size_t>(k)] = core_id(i, j);
    }

    auto add_layer = [&mesh, M](const std::vector<int>& inner,
                                const std::vector<Eigen::Vector2d>& outer_pts, int mat) {
        std::vector<int> outer(static_cast<size_t>(M));
        for (int k = 0; k < M; ++k) {
            outer[static_cast<size_t>(k)] = static_cast<int>(mesh.v.size());
            mesh.v.push_back(outer_pts[static_cast<size_t>(k)]);
        }
        for (int k = 0; k < M; ++k) {
            const int kn = (k + 1) % M;
            const int p0 = inner[static_cast<size_t>(k)], p1 = outer[static_cast<size_t>(k)];
            const int p2 = outer[static_cast<size_t>(kn)], p3 = inner[static_cast<size_t>(kn)];
            if (k % 2 == 0) {  // parity split keeps the mesh mirror- and rotation-symmetric
                mesh.tri.push_back({p0, p1, p2});
                mesh.tri.push_back({p0, p2, p3});
            } else {
                mesh.tri.push_back({p1, p2, p3});
                mesh.tri.push_back({p1, p3, p0});
            }
            mesh.mat.push_back(mat);
            mesh.mat.push_back(mat);
        }
        return outer;
    };

    auto ray_point = [M](int k, double radius) {
        const double th = 2.0 * M_PI * k / M;
        return Eigen::Vector2d(radius * std::cos(th), radius * std::sin(th));
    };
    auto boundary_point = [M, l](int k) {
        const double th = 2.0 * M_PI * k / M;
        const double c = std::cos(th), s = std::sin(th);
        const double scale = 0.5 * l / std::max(std::abs(c), std::abs(s));
        return Eigen::Vector2d(scale * c, scale * s);
    };

    // core square -> polygonal circle, m layers
    std::vector<int> inner = ring;
    for (int j = 1; j <= m; ++j) {
        const double t = static_cast<double>(j) / m;
        std::vector<Eigen::Vector2d> pts(static_cast<size_t>(M));
        for (int k = 0; k < M; ++k)
            pts[static_cast<size_t>(k)] =
                (1.0 - t) * mesh.v[static_cast<size_t>(ring[static_cast<size_t>(k)])] +
                t * ray_point(k, r);
        inner = add_layer(inner, pts, 1);
    }

    // polygonal circle -> cell boundary
    const double h_arc = 2.0 * M_PI * r / M;
    const int layers = std::max(2, static_cast<int>(std::llround((0.5 * l - r) / h_arc)));
    for (int j = 1; j <= layers; ++j) {
        const double t = static_cast<double>(j) / layers;
        std::vector<Eigen::Vector2d> pts(static_cast<size_t>(M));
        for (int k = 0; k < M; ++k)
            pts[static_cast<size_t>(k)] = (1.0 - t) * ray_point(k, r) + t * boundary_point(k);
        inner = add_layer(inner, pts, 0);
    }
    return mesh;
}

Mesh2D tri_to_mesh(const TriMeshLin& lin, double length_scale) {
    Mesh2D mesh;
    mesh.nodes = lin.v;
    std::unordered_map<std::int64_t, int> midside;
    const std::int64_t nn = static_cast<std::int64_t>(lin.v.size());
    auto mid_id = [&](int p, int q) {
        const std::int64_t key = static_cast<std::int64_t>(std::min(p, q)) * nn + std::max(p, q);
        auto it = midside.find(key);
        if (it != midside.end()) return it->second;
        const int id = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(0.5 * (lin.v[static_cast<size_t>(p)] + lin.v[static_cast<size_t>(q)]));
        midside.emplace(key, id);
        return id;
    };
    ElementBlock block;
    block.kind = CellKind::tri6;
    block.conn.reserve(lin.tri.size() * 6);
    for (const auto& t : lin.tri) {
        const int cell[6] = {t[0], t[1], t[2], mid_id(t[0], t[1]), mid_id(t[1], t[2]),
                             mid_id(t[2], t[0])};
        block.conn.insert(block.conn.end(), cell, cell + 6);
    }
    mesh.blocks.push_back(std::move(block));
    mesh.material_id = lin.mat;
    mesh.build_edge_table();

    // boundary tagging: every adjacency-1 edge goes into "boundary"; edges on
    // the axis-aligned bounding box also get a side tag
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : mesh.nodes) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    const double tol = 1e-9 * length_scale;
    const ElementBlock& b = mesh.blocks[0];
    for (int e = 0; e < b.count(); ++e) {
        for (int le = 0; le < 3; ++le) {
            const LocalEdge& ed = local_edge(CellKind::tri6, le);
            const int* c = b.cell(e);
            if (mesh.edges[static_cast<size_t>(mesh.edge_id(c[ed.c0], c[ed.c1]))].adjacency != 1)
                continue;
            const BoundaryEdgeRef ref{0, e, le};
            mesh.boundary_tags["boundary"].push_back(ref);
            const Eigen::Vector2d& p0 = mesh.nodes[static_cast<size_t>(c[ed.c0])];
            const Eigen::Vector2d& p1 = mesh.nodes[static_cast<size_t>(c[ed.c1])];
            if (std::abs(p0.x() - xmin) < tol && std::abs(p1.x() - xmin) < tol)
                mesh.boundary_tags["left"].push_back(ref);
            else if (std::abs(p0.x() - xmax) < tol && std::abs(p1.x() - xmax) < tol)
                mesh.boundary_tags["right"].push_back(ref);
            else if (std::abs(p0.y() - ymin) < tol && std::abs(p1.y() - ymin) < tol)
                mesh.boundary_tags["bottom"].push_back(ref);
            else if (std::abs(p0.y() - ymax) < tol && std::abs(p1.y() - ymax) < tol)
                mesh.boundary_tags["top"].push_back(ref);
        }
    }
    return mesh;
}

}  // namespace

Mesh2D build_unit_cell_mesh(const UnitCellSpec& spec) {
    if (spec.refinement < 1) throw std::invalid_argument("unit cell refinement must be >= 1");
    if (!(spec.d < spec.l)) throw std::invalid_argument("degenerate unit cell geometry: d >= l");
    if (spec.variant < 1 || spec.variant > 4)
        throw std::invalid_argument("unit cell variant must be 1..4");
    const double l = spec.l, r = 0.5 * spec.d;
    const double tol = 1e-10 * l;
    const TriMeshLin cell = unit_cell_variant1_lin(l, r, spec.refinement);

    TriMeshLin out;
    switch (spec.variant) {
        case 1:
            out = cell;
            break;
        case 2: {
            // quadrant swap: the window shifted by half a period in x and y
            for (double sx : {-1.0, 1.0})
                for (double sy : {-1.0, 1.0}) {
                    const TriMeshLin part = filter(cell, [sx, sy](const Eigen::Vector2d& c) {
                        return sx * c.x() > 0.0 && sy * c.y() > 0.0;
                    });
                    append(out, part, Eigen::Vector2d(-sx * 0.5 * l, -sy * 0.5 * l));
                }
            break;
        }
        case 3: {
            // diamond window centered on a lattice point: full cell plus the
            // facing quarter of each of the four neighbors
            append(out, cell, Eigen::Vector2d::Zero());
            const Eigen::Vector2d shifts[4] = {{l, 0.0}, {-l, 0.0}, {0.0, l}, {0.0, -l}};
            for (const Eigen::Vector2d& s : shifts) {
                const TriMeshLin part = filter(cell, [&s](const Eigen::Vector2d& c) {
                    return -s.dot(c) > std::abs(s.x() * c.y() - s.y() * c.x());
                });
                append(out, part, s);
            }
            break;
        }
        case 4: {
            // diamond window centered on a lattice corner: the facing half of
            // each of the four cells around it
            for (double sx : {-1.0, 1.0})
                for (double sy : {-1.0, 1.0}) {
                    const TriMeshLin part = filter(cell, [sx, sy](const Eigen::Vector2d& c) {
                        return sx * c.x() + sy * c.y() < 0.0;
                    });
                    append(out, part, Eigen::Vector2d(sx * 0.5 * l, sy * 0.5 * l));
                }
            break;
        }
    }
    compact(out, tol);
    return tri_to_mesh(out, l);
}

namespace {

Mesh2D tile_cells(int nx, int ny, const UnitCellSpec& spec, const Eigen::Vector2d& origin) {
    const double l = spec.l;
    const TriMeshLin cell = unit_cell_variant1_lin(l, 0.5 * spec.d, spec.refinement);
    TriMeshLin out;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            append(out, cell, origin + Eigen::Vector2d((i + 0.5) * l, (j + 0.5) * l));
    compact(out, 1e-10 * l);
    return tri_to_mesh(out, l);
}

}  // namespace

Mesh2D build_beam_mesh(int n, const UnitCellSpec& spec) {
    if (n < 1) throw std::invalid_argument("beam size index must be >= 1");
    return tile_cells(12 * n, n, spec, Eigen::Vector2d(0.0, -0.5 * n * spec.l));
}

Mesh2D build_cell_cluster(int nx, int ny, const UnitCellSpec& spec) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("cluster size must be >= 1");
    return tile_cells(nx, ny, spec, Eigen::Vector2d(-0.5 * nx * spec.l, -0.5 * ny * spec.l));
}

PeriodicPairs build_periodic_pairs(const Mesh2D& mesh) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : mesh.nodes) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    const double w = xmax - xmin, h = ymax - ymin;
    const double tol = 1e-10 * std::max(w, h);
    const std::vector<int> boundary = mesh.tag_nodes("boundary");

    auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };
    std::vector<int> left, right, bottom, top, corners(4, -1);
    for (int id : boundary) {
        const Eigen::Vector2d& p = mesh.nodes[static_cast<size_t>(id)];
        const bool lx = near(p.x(), xmin), rx = near(p.x(), xmax);
        const bool by = near(p.y(), ymin), ty = near(p.y(), ymax);
        if (lx && by) corners[0] = id;
        else if (rx && by) corners[1] = id;
        else if (rx && ty) corners[2] = id;
        else if (lx && ty) corners[3] = id;
        else if (lx) left.push_back(id);
        else if (rx) right.push_back(id);
        else if (by) bottom.push_back(id);
        else if (ty) top.push_back(id);
        else {
            std::ostringstream os;
            os << "build_periodic_pairs: boundary node " << id << " at (" << p.x() << ", "
               << p.y() << ") lies on no rectangle side";
            throw std::runtime_error(os.str());
        }
    }
    for (int c = 0; c < 4; ++c)
        if (corners[c] < 0) throw std::runtime_error("build_periodic_pairs: missing corner node");

    PeriodicPairs pairs;
    auto match = [&](std::vector<int>& masters, std::vector<int>& slaves, int axis,
                     const Eigen::Vector2d& offset) {
        auto by_axis = [&](int a, int b) {
            return mesh.nodes[static_cast<size_t>(a)](axis) < mesh.nodes[static_cast<size_t>(b)](axis);
        };
        std::sort(masters.begin(), masters.end(), by_axis);
        std::sort(slaves.begin(), slaves.end(), by_axis);
        if (masters.size() != slaves.size()) {
            std::ostringstream os;
            os << "build_periodic_pairs: side node counts differ (" << masters.size() << " vs "
               << slaves.size() << ")";
            throw std::runtime_error(os.str());
        }
        for (size_t k = 0; k < masters.size(); ++k) {
            const Eigen::Vector2d& pm = mesh.nodes[static_cast<size_t>(masters[k])];
            const Eigen::Vector2d& ps = mesh.nodes[static_cast<size_t>(slaves[k])];
            if ((ps - pm - offset).norm() > tol) {
                std::ostringstream os;
                os << "build_periodic_pairs: unmatched boundary node " << slaves[k] << " at ("
                   << ps.x() << ", " << ps.y() << "); nearest candidate master " << masters[k]
                   << " at (" << pm.x() << ", " << pm.y() << ")";
                throw std::runtime_error(os.str());
            }
            pairs.pairs.push_back({masters[k], slaves[k], offset});
        }
    };
    match(left, right, 1, Eigen::Vector2d(w, 0.0));
    match(bottom, top, 0, Eigen::Vector2d(0.0, h));
    pairs.pairs.push_back({corners[0], corners[1], Eigen::Vector2d(w, 0.0)});
    pairs.pairs.push_back({corners[0], corners[3], Eigen::Vector2d(0.0, h)});
    pairs.pairs.push_back({corners[0], corners[2], Eigen::Vector2d(w, h)});
    return pairs;
}

double min_node_distance(const Mesh2D& mesh) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : mesh.nodes) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    const double diag = std::hypot(xmax - xmin, ymax - ymin);
    const double cell = std::max(diag / std::sqrt(static_cast<double>(mesh.nodes.size()) + 1.0),
                                 1e-30);
    std::unordered_map<std::int64_t, std::vector<int>> grid;
    auto cell_of = [cell](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
    auto key = [](std::int64_t ix, std::int64_t iy) { return ix * 73856093LL ^ iy * 19349663LL; };
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const Eigen::Vector2d& p = mesh.nodes[static_cast<size_t>(i)];
        grid[key(cell_of(p.x()), cell_of(p.y()))].push_back(i);
    }
    double best = 1e300;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const Eigen::Vector2d& p = mesh.nodes[static_cast<size_t>(i)];
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = grid.find(key(cell_of(p.x()) + dx, cell_of(p.y()) + dy));
                if (it == grid.end()) continue;
                for (int j : it->second)
                    if (j > i)
                        best = std::min(best, (p - mesh.nodes[static_cast<size_t>(j)]).norm());
            }
    }
    return best;
}

}  // namespace rmfem
