#include "rmfem/identify.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rmfem/solve.hpp"

namespace rmfem {

namespace {

Eigen::Matrix2d strain_matrix(int voigt_case) {
    Eigen::Matrix2d e = Eigen::Matrix2d::Zero();
    if (voigt_case == 0) e(0, 0) = 1.0;
    else if (voigt_case == 1) e(1, 1) = 1.0;
    else e(0, 1) = e(1, 0) = 0.5;  // engineering gamma = 1
    return e;
}

CubicMeasurement measure_from_columns(const std::array<Eigen::Vector3d, 3>& cols) {
    CubicMeasurement m;
    for (int k = 0; k < 3; ++k) m.full.col(k) = cols[static_cast<size_t>(k)];
    m.full = 0.5 * (m.full + m.full.transpose()).eval();
    VoigtTensor v;
    v.m = m.full;
    m.cubic = voigt_to_cubic(v, &m.off_cubic_residual);
    m.warning = m.off_cubic_residual > 0.01;
    return m;
}

int find_corner_master(const PeriodicPairs& pairs) {
    // the (w, h) diagonal pair starts at the bottom-left master corner
    for (auto it = pairs.pairs.rbegin(); it != pairs.pairs.rend(); ++it)
        if (it->offset.x() > 0.0 && it->offset.y() > 0.0) return it->master;
    throw std::runtime_error("periodic pairs carry no corner pair");
}

}  // namespace

CubicMeasurement homogenize_macro(const Mesh2D& cell, const CellMaterials& mats) {
    const DofMap dofs = make_elastic_dofmap(cell);
    const SystemMatrix sys = assemble_elasticity(cell, dofs, mats.by_id());
    const PeriodicPairs pairs = build_periodic_pairs(cell);
    const int pin = find_corner_master(pairs);
    std::array<Eigen::Vector3d, 3> cols;
    for (int k = 0; k < 3; ++k) {
        ConstraintSet cs;
        apply_periodic(cs, dofs, pairs, strain_matrix(k), pin);
        const SolutionField sol = solve_spd(sys, cs);
        cols[static_cast<size_t>(k)] = average_stress(cell, dofs, mats.by_id(), sol);
    }
    return measure_from_columns(cols);
}

CubicMeasurement apparent_affine(const Mesh2D& cell, const CellMaterials& mats) {
    const DofMap dofs = make_elastic_dofmap(cell);
    const SystemMatrix sys = assemble_elasticity(cell, dofs, mats.by_id());
    std::array<Eigen::Vector3d, 3> cols;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Matrix2d e = strain_matrix(k);
        ConstraintSet cs;
        apply_dirichlet_u(cs, cell, dofs, "boundary",
                          [&e](const Eigen::Vector2d& x) { return Eigen::Vector2d(e * x); });
        const SolutionField sol = solve_spd(sys, cs);
        cols[static_cast<size_t>(k)] = average_stress(cell, dofs, mats.by_id(), sol);
    }
    return measure_from_columns(cols);
}

double beta_bending(const Mesh2D& cluster, const CellMaterials& mats, const CubicParams& c_macro,
                    double kappa) {
    const DofMap dofs = make_elastic_dofmap(cluster);
    const SystemMatrix sys = assemble_elasticity(cluster, dofs, mats.by_id());
    const double ratio = c_macro.lambda / (2.0 * c_macro.mu + c_macro.lambda);
    ConstraintSet cs;
    apply_dirichlet_u(cs, cluster, dofs, "boundary", [kappa, ratio](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(0.5 * kappa * (-2.0 * x.x() * x.y()),
                               0.5 * kappa * (ratio * x.y() * x.y() + x.x() * x.x()));
    });
    const SolutionField sol = solve_spd(sys, cs);
    const double e_het = total_energy(sys, sol);

    // homogeneous reference: strain diag(-kappa y, ratio kappa y) gives the
    // analytic energy density 1/2 Etilde kappa^2 y^2
    double second_moment = 0.0;
    const QuadratureRule rule = tri_gauss_7();
    for (int b = 0; b < static_cast<int>(cluster.blocks.size()); ++b) {
        const ElementBlock& block = cluster.blocks[static_cast<size_t>(b)];
        for (int e = 0; e < block.count(); ++e) {
            const auto coords = cluster.cell_coords(b, e);
            for (int q = 0; q < rule.weights.size(); ++q) {
                const ScalarShape sh = t2_shape(rule.points(q, 0), rule.points(q, 1));
                const ElementMap map = element_map(sh, coords);
                const double y = (coords.transpose() * sh.N).y();
                second_moment += rule.weights(q) * map.det * y * y;
            }
        }
    }
    const double e_hom = 0.5 * plane_strain_bending_modulus(c_macro) * kappa * kappa * second_moment;
    return e_het / e_hom;
}

namespace {

bool cubic_strictly_greater(const CubicParams& a, const CubicParams& b) {
    return a.mu_star > b.mu_star && a.mu > b.mu && a.lambda + a.mu > b.lambda + b.mu;
}

}  // namespace

std::vector<Candidate> build_candidates(const CubicParams& c_macro, const CubicParams& lowner,
                                        double alpha, const IsotropicParams& matrix_material,
                                        double beta_extrapolated) {
    const VoigtTensor macro_v = cubic_to_voigt(c_macro);
    std::vector<Candidate> out;
    auto add = [&](const std::string& name, const CubicParams& micro) {
        if (!cubic_strictly_greater(micro, c_macro))
            throw std::runtime_error("candidate '" + name + "' is not stiffer than the macro tensor");
        Candidate c;
        c.name = name;
        c.c_micro = micro;
        c.c_e = voigt_to_cubic(reuss_ce(cubic_to_voigt(micro), macro_v));
        out.push_back(std::move(c));
    };
    add("lowner-scaled", lowner.scaled(alpha));
    add("matrix", matrix_material.as_cubic());
    add("beta-scaled", c_macro.scaled(beta_extrapolated));
    add("cosserat-limit", c_macro.scaled(1000.0));
    return out;
}

const Candidate& IdentifiedParams::candidate(const std::string& name) const {
    for (const Candidate& c : candidates)
        if (c.name == name) return c;
    throw std::runtime_error("unknown micro-tensor candidate '" + name + "'");
}

IdentifiedParams run_identification(const UnitCellSpec& cell, const CellMaterials& mats,
                                    int macro_variant, int beta_refinement) {
    if (beta_refinement < 1) beta_refinement = cell.refinement;
    IdentifiedParams out;
    out.materials = mats;
    out.cell = cell;

    UnitCellSpec macro_cell = cell;
    macro_cell.variant = macro_variant;
    const CubicMeasurement macro = homogenize_macro(build_unit_cell_mesh(macro_cell), mats);
    out.c_macro = macro.cubic;
    out.c_macro_residual = macro.off_cubic_residual;

    std::vector<CubicParams> apparents;
    for (int v = 1; v <= 4; ++v) {
        UnitCellSpec s = cell;
        s.variant = v;
        const CubicMeasurement m = apparent_affine(build_unit_cell_mesh(s), mats);
        out.apparent[static_cast<size_t>(v - 1)] = m.cubic;
        out.apparent_residual[static_cast<size_t>(v - 1)] = m.off_cubic_residual;
        apparents.push_back(m.cubic);
    }
    out.lowner = lowner_sup_cubic(apparents);
    out.alpha = alpha_upper_bound(mats.matrix, out.lowner);

    UnitCellSpec beta_cell_spec = cell;
    beta_cell_spec.refinement = beta_refinement;
    for (int n : {1, 2, 4}) {
        const double beta =
            beta_bending(build_cell_cluster(n, n, beta_cell_spec), mats, out.c_macro, 1.0 / cell.l);
        out.beta_clusters.emplace_back(n, beta);
    }
    out.beta_cell = out.beta_clusters.front().second;

    out.candidates = build_candidates(out.c_macro, out.lowner, out.alpha, mats.matrix);
    return out;
}

// ---------------------------------------------------------------------------
// report I/O (plain key = value text, moduli in GPa)
// ---------------------------------------------------------------------------

namespace {

constexpr double kGPa = 1e9;

void put_cubic(std::map<std::string, std::string>& kv, const std::string& prefix,
               const CubicParams& c) {
    std::ostringstream os;
    os.precision(12);
    os << c.lambda / kGPa;
    kv[prefix + ".lambda_gpa"] = os.str();
    os.str("");
    os << c.mu / kGPa;
    kv[prefix + ".mu_gpa"] = os.str();
    os.str("");
    os << c.mu_star / kGPa;
    kv[prefix + ".mu_star_gpa"] = os.str();
}

double get_num(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("identification report misses key '" + key + "'");
    return std::stod(it->second);
}

CubicParams get_cubic(const std::map<std::string, std::string>& kv, const std::string& prefix) {
    return {get_num(kv, prefix + ".lambda_gpa") * kGPa, get_num(kv, prefix + ".mu_gpa") * kGPa,
            get_num(kv, prefix + ".mu_star_gpa") * kGPa};
}

}  // namespace

void write_report(const IdentifiedParams& p, const std::string& path) {
    std::map<std::string, std::string> kv;
    auto put_num = [&kv](const std::string& key, double v) {
        std::ostringstream os;
        os.precision(12);
        os << v;
        kv[key] = os.str();
    };
    put_num("cell.l_m", p.cell.l);
    put_num("cell.d_m", p.cell.d);
    put_num("cell.refinement", p.cell.refinement);
    put_num("matrix.lambda_gpa", p.materials.matrix.lambda / kGPa);
    put_num("matrix.mu_gpa", p.materials.matrix.mu / kGPa);
    put_num("inclusion.lambda_gpa", p.materials.inclusion.lambda / kGPa);
    put_num("inclusion.mu_gpa", p.materials.inclusion.mu / kGPa);
    put_cubic(kv, "c_macro", p.c_macro);
    put_num("c_macro.off_cubic_residual", p.c_macro_residual);
    for (int v = 1; v <= 4; ++v) {
        put_cubic(kv, "apparent.v" + std::to_string(v), p.apparent[static_cast<size_t>(v - 1)]);
        put_num("apparent.v" + std::to_string(v) + ".off_cubic_residual",
                p.apparent_residual[static_cast<size_t>(v - 1)]);
    }
    put_cubic(kv, "lowner", p.lowner);
    put_num("alpha", p.alpha);
    for (const auto& [n, beta] : p.beta_clusters)
        put_num("beta.cluster" + std::to_string(n), beta);
    for (const Candidate& c : p.candidates) {
        put_cubic(kv, "candidate." + c.name + ".micro", c.c_micro);
        put_cubic(kv, "candidate." + c.name + ".e", c.c_e);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write identification report '" + path + "'");
    out << "# identified material parameters (moduli in GPa, lengths in m)\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

IdentifiedParams read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open identification report '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    IdentifiedParams p;
    p.cell.l = get_num(kv, "cell.l_m");
    p.cell.d = get_num(kv, "cell.d_m");
    p.cell.refinement = static_cast<int>(get_num(kv, "cell.refinement"));
    p.materials.matrix = {get_num(kv, "matrix.lambda_gpa") * kGPa,
                          get_num(kv, "matrix.mu_gpa") * kGPa};
    p.materials.inclusion = {get_num(kv, "inclusion.lambda_gpa") * kGPa,
                             get_num(kv, "inclusion.mu_gpa") * kGPa};
    p.c_macro = get_cubic(kv, "c_macro");
    p.c_macro_residual = get_num(kv, "c_macro.off_cubic_residual");
    for (int v = 1; v <= 4; ++v) {
        p.apparent[static_cast<size_t>(v - 1)] = get_cubic(kv, "apparent.v" + std::to_string(v));
        p.apparent_residual[static_cast<size_t>(v - 1)] =
            get_num(kv, "apparent.v" + std::to_string(v) + ".off_cubic_residual");
    }
    p.lowner = get_cubic(kv, "lowner");
    p.alpha = get_num(kv, "alpha");
    for (int n : {1, 2, 4}) {
        const std::string key = "beta.cluster" + std::to_string(n);
        if (kv.count(key)) p.beta_clusters.emplace_back(n, get_num(kv, key));
    }
    if (!p.beta_clusters.empty()) p.beta_cell = p.beta_clusters.front().second;
    for (const char* name : {"lowner-scaled", "matrix", "beta-scaled", "cosserat-limit"}) {
        Candidate c;
        c.name = name;
        c.c_micro = get_cubic(kv, std::string("candidate.") + name + ".micro");
        c.c_e = get_cubic(kv, std::string("candidate.") + name + ".e");
        p.candidates.push_back(std::move(c));
    }
    return p;
}

}  // namespace rmfem
