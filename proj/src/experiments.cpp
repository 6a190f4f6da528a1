#include "rmfem/experiments.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "rmfem/vtk.hpp"

namespace rmfem {

std::vector<double> log_sweep(double lo_rel, double hi_rel, int points, double cell_l) {
    if (points < 2 || lo_rel <= 0.0 || hi_rel <= lo_rel)
        throw std::invalid_argument("log_sweep: need points >= 2 and 0 < lo < hi");
    std::vector<double> out;
    for (int k = 0; k < points; ++k) {
        const double t = static_cast<double>(k) / (points - 1);
        out.push_back(cell_l * lo_rel * std::pow(hi_rel / lo_rel, t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto fail = [&](const std::string& why) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ", field '" + key +
                                     "': " + why);
        };
        auto num = [&](const std::string& v) {
            try {
                size_t used = 0;
                const double x = std::stod(v, &used);
                if (trim(v.substr(used)).size()) fail("trailing characters in number '" + v + "'");
                return x;
            } catch (const std::logic_error&) {
                fail("cannot parse number '" + v + "'");
                return 0.0;
            }
        };
        auto num_list = [&](const std::string& v) {
            std::vector<double> out;
            for (const std::string& p : split_list(v)) out.push_back(num(trim(p)));
            return out;
        };
        if (key == "scenario") cfg.scenario = value;
        else if (key == "sizes" || key == "n") {
            cfg.sizes.clear();
            for (double x : num_list(value)) cfg.sizes.push_back(static_cast<int>(x));
        }
        else if (key == "loading") cfg.loading = value;
        else if (key == "candidate") cfg.candidate = value;
        else if (key == "lc") cfg.lc = num_list(value);
        else if (key == "mu_c") cfg.mu_c = num_list(value);
        else if (key == "mu_curv") cfg.mu_curv = num(value);
        else if (key == "bc") cfg.bc = value;
        else if (key == "refinement") cfg.refinement = static_cast<int>(num(value));
        else if (key == "rmm_nx") cfg.rmm_nx = static_cast<int>(num(value));
        else if (key == "rmm_ny") cfg.rmm_ny = static_cast<int>(num(value));
        else if (key == "kappa") cfg.kappa = num(value);
        else if (key == "traction") cfg.traction = num(value);
        else if (key == "shear_amplitude") cfg.shear_amplitude = num(value);
        else if (key == "cantilever_traction") cfg.cantilever_traction = num(value);
        else if (key == "cell_l") cfg.cell.l = num(value);
        else if (key == "cell_d") cfg.cell.d = num(value);
        else if (key == "matrix_young") cfg.matrix_young = num(value);
        else if (key == "matrix_poisson") cfg.matrix_poisson = num(value);
        else if (key == "inclusion_young") cfg.inclusion_young = num(value);
        else if (key == "inclusion_poisson") cfg.inclusion_poisson = num(value);
        else if (key == "macro_variant") cfg.macro_variant = static_cast<int>(num(value));
        else if (key == "beta_refinement") cfg.beta_refinement = static_cast<int>(num(value));
        else if (key == "report") cfg.report_path = value;
        else if (key == "out") cfg.out_dir = value;
        else if (key == "threads") cfg.threads = static_cast<int>(num(value));
        else if (key == "vtk") cfg.vtk = (value == "1" || value == "true");
        else fail("unknown field");
    }
    cfg.cell.refinement = cfg.refinement;
    return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV '" + path + "'");
    out.precision(12);
    out << "scenario,candidate,loading,bc,n,lc,mu_c,d_eff,d_eff_deflection,d_over_dmacro,"
           "kappa_fit,moment,energy,pi_over_pi_macro,t_over_tmacro,w_macro_over_w\n";
    auto field = [&out](double v) {
        out << ",";
        if (std::isfinite(v)) out << v;
    };
    for (const SweepRow& r : result.rows) {
        out << r.scenario << "," << r.candidate << "," << r.loading << "," << r.bc << "," << r.n
            << "," << r.lc << "," << r.mu_c;
        field(r.d_eff);
        field(r.d_eff_deflection);
        field(r.d_over_dmacro);
        field(r.kappa_fit);
        field(r.moment);
        field(r.energy);
        field(r.pi_over_pi_macro);
        field(r.t_over_tmacro);
        field(r.w_macro_over_w);
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// post-processing
// ---------------------------------------------------------------------------

double fit_curvature(const Mesh2D& mesh, const DofMap& dofs, const SolutionField& sol,
                     double beam_length) {
    double num = 0.0, den = 0.0;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
        const double x = mesh.nodes[static_cast<size_t>(n)].x();
        const double phi = 0.5 * (x * x - beam_length * beam_length);
        num += sol.d(dofs.u_dof(n, 1)) * phi;
        den += phi * phi;
    }
    if (den <= 0.0) throw std::runtime_error("fit_curvature: degenerate geometry");
    return num / den;
}

namespace {

double moment_about(const Mesh2D& mesh, const DofMap& dofs, const Eigen::VectorXd& r,
                    const std::vector<int>& nodes, const Eigen::Vector2d& center) {
    double m = 0.0;
    for (int n : nodes) {
        const Eigen::Vector2d d = mesh.nodes[static_cast<size_t>(n)] - center;
        m += d.x() * r(dofs.u_dof(n, 1)) - d.y() * r(dofs.u_dof(n, 0));
    }
    return m;
}

double mean_uy(const Mesh2D&, const DofMap& dofs, const SolutionField& sol,
               const std::vector<int>& nodes) {
    double s = 0.0;
    for (int n : nodes) s += sol.d(dofs.u_dof(n, 1));
    return s / static_cast<double>(nodes.size());
}

int nearest_node(const Mesh2D& mesh, const Eigen::Vector2d& x, double tol) {
    int best = -1;
    double bd = 1e300;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
        const double d = (mesh.nodes[static_cast<size_t>(n)] - x).norm();
        if (d < bd) {
            bd = d;
            best = n;
        }
    }
    if (bd > tol) throw std::runtime_error("no mesh node near the requested point");
    return best;
}

}  // namespace

BendingStiffness bending_stiffness(const Mesh2D& mesh, const DofMap& dofs,
                                   const SystemMatrix& sys, const SolutionField& sol,
                                   double beam_length) {
    BendingStiffness bs;
    bs.kappa_fit = fit_curvature(mesh, dofs, sol, beam_length);
    const Eigen::VectorXd r = reactions(sys, sol);
    bs.moment_left =
        std::abs(moment_about(mesh, dofs, r, mesh.tag_nodes("left"), Eigen::Vector2d(0.0, 0.0)));
    bs.moment_right = std::abs(moment_about(mesh, dofs, r, mesh.tag_nodes("right"),
                                            Eigen::Vector2d(beam_length, 0.0)));
    bs.w0 = mean_uy(mesh, dofs, sol, mesh.tag_nodes("left"));
    bs.from_moment = bs.moment_left / std::abs(bs.kappa_fit);
    bs.from_deflection = bs.moment_left * beam_length * beam_length / (2.0 * std::abs(bs.w0));
    return bs;
}

// ---------------------------------------------------------------------------
// scenario runners
// ---------------------------------------------------------------------------

namespace {

struct RowJob {
    int n = 1;
    double lc = 0.0;
    double mu_c = 0.0;
    int index = 0;
};

std::vector<RowJob> job_grid(const ScenarioConfig& cfg) {
    std::vector<RowJob> jobs;
    int idx = 0;
    for (int n : cfg.sizes)
        for (double lc : cfg.lc)
            for (double mu_c : cfg.mu_c) jobs.push_back({n, lc, mu_c, idx++});
    return jobs;
}

std::vector<SweepRow> run_jobs(const ScenarioConfig& cfg, const std::vector<RowJob>& jobs,
                               const std::function<SweepRow(const RowJob&)>& work) {
    std::vector<SweepRow> rows(jobs.size());
    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || jobs.size() <= 1) {
        for (const RowJob& j : jobs) rows[static_cast<size_t>(j.index)] = work(j);
        return rows;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= jobs.size()) return;
            try {
                rows[static_cast<size_t>(jobs[k].index)] = work(jobs[k]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

// Rotation loading: u_x = 0 on the left edge, u_x linear in y on the right
// edge (end rotation kappa L / 2), midpoint of the right edge pinned in y.
void apply_bending_u_bcs(ConstraintSet& cs, const Mesh2D& mesh, const DofMap& dofs,
                         const ScenarioConfig& cfg, double beam_length, bool rotation) {
    apply_dirichlet_u(cs, mesh, dofs, "left",
                      [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero(); },
                      /*fix_x=*/true, /*fix_y=*/false);
    const int pin =
        nearest_node(mesh, Eigen::Vector2d(beam_length, 0.0), 1e-6 * beam_length);
    cs.set_dirichlet(dofs.u_dof(pin, 1), 0.0);
    if (rotation) {
        const double theta = 0.5 * cfg.kappa * beam_length;
        apply_dirichlet_u(cs, mesh, dofs, "right",
                          [theta](const Eigen::Vector2d& x) {
                              return Eigen::Vector2d(-theta * x.y(), 0.0);
                          },
                          /*fix_x=*/true, /*fix_y=*/false);
    }
}

void add_bending_traction(SystemMatrix& sys, const Mesh2D& mesh, const DofMap& dofs,
                          const ScenarioConfig& cfg, double height) {
    const double scale = 2.0 * cfg.traction / height;  // peak value +-traction at the surfaces
    add_traction(sys, mesh, dofs, "right", [scale](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(scale * x.y(), 0.0);
    });
}

struct PenaltyPlan {
    std::vector<std::pair<std::string, RowMask>> edges;
};

PenaltyPlan bending_penalty_plan(const std::string& bc) {
    PenaltyPlan plan;
    if (bc == "cc-both-ends")
        plan.edges = {{"left", RowMask::both}, {"right", RowMask::both}};
    else if (bc == "cc-left-only")
        plan.edges = {{"left", RowMask::both}};
    else if (bc == "cc-right-only")
        plan.edges = {{"right", RowMask::both}};
    else if (bc == "cc-none")
        ;  // no coupling anywhere
    else if (bc == "cc-whole-boundary")
        plan.edges = {{"left", RowMask::both},
                      {"right", RowMask::both},
                      {"top", RowMask::both},
                      {"bottom", RowMask::both}};
    else if (bc == "cc-partial-y")
        plan.edges = {{"left", RowMask::both},
                      {"right", RowMask::both},
                      {"top", RowMask::y_row},
                      {"bottom", RowMask::y_row}};
    else
        throw std::runtime_error("unknown bc scenario '" + bc + "'");
    return plan;
}

RmmMaterial rmm_material(const IdentifiedParams& id, const ScenarioConfig& cfg, const RowJob& job) {
    const Candidate& cand = id.candidate(cfg.candidate);
    RmmMaterial mat;
    mat.c_e = cubic_to_voigt(cand.c_e);
    mat.c_micro = cubic_to_voigt(cand.c_micro);
    mat.mu_curv = cfg.mu_curv < 0.0 ? id.c_macro.mu : cfg.mu_curv;
    mat.lc = job.lc;
    mat.n_scale = static_cast<double>(job.n);
    mat.mu_c = job.mu_c;
    // with mu_c = 0 the skew part of P carries energy only through the curl
    // term, which leaves a constant mode free (exactly, for cc-none) or
    // nearly so at small lc; the tiny gauge keeps the system definite and
    // shifts results at the 1e-6 level, far below any reported tolerance
    if (mat.mu_c == 0.0) mat.mu_c = 1e-6 * id.c_macro.mu;
    mat.kappa1 = default_coupling_penalty(id.c_macro.mu, job.lc / mat.n_scale, id.cell.l);
    return mat;
}

struct RmmBeamContext {
    Mesh2D mesh;
    DofMap dofs;
    double length, height;
};

RmmBeamContext make_rmm_beam(const ScenarioConfig& cfg, double cell_l) {
    RmmBeamContext ctx;
    ctx.length = 24.0 * cell_l;
    ctx.height = 2.0 * cell_l;
    ctx.mesh = build_structured_quad_grid(ctx.length, ctx.height, cfg.rmm_nx, cfg.rmm_ny,
                                          Eigen::Vector2d(0.0, -0.5 * ctx.height));
    ctx.dofs = make_rmm_dofmap(ctx.mesh);
    return ctx;
}

// Classical solve of the same beam and loading with a given tensor; returns
// its total potential.
double classical_beam_energy(const RmmBeamContext& ctx, const ScenarioConfig& cfg,
                             const CubicParams& tensor, bool rotation) {
    const DofMap dofs = make_elastic_dofmap(ctx.mesh);
    SystemMatrix sys =
        assemble_elasticity(ctx.mesh, dofs, {cubic_to_voigt(tensor)});
    ConstraintSet cs;
    apply_bending_u_bcs(cs, ctx.mesh, dofs, cfg, ctx.length, rotation);
    if (!rotation) add_bending_traction(sys, ctx.mesh, dofs, cfg, ctx.height);
    const SolutionField sol = solve_spd(sys, cs);
    return total_energy(sys, sol);
}

SweepRow base_row(const ScenarioConfig& cfg, const RowJob& job) {
    SweepRow row;
    row.scenario = cfg.scenario;
    row.candidate = cfg.candidate;
    row.loading = cfg.loading;
    row.bc = cfg.bc;
    row.n = job.n;
    row.lc = job.lc;
    row.mu_c = job.mu_c;
    return row;
}

}  // namespace

SweepResult run_bending_resolved(const ScenarioConfig& cfg, const IdentifiedParams& id) {
    const bool rotation = cfg.loading == "rotation";
    std::vector<RowJob> jobs;
    int idx = 0;
    for (int n : cfg.sizes) jobs.push_back({n, 0.0, 0.0, idx++});
    const double d_macro_modulus = plane_strain_bending_modulus(id.c_macro);
    auto work = [&](const RowJob& job) {
        UnitCellSpec spec = id.cell;
        spec.refinement = cfg.refinement;
        const Mesh2D mesh = build_beam_mesh(job.n, spec);
        const DofMap dofs = make_elastic_dofmap(mesh);
        const double length = 12.0 * job.n * spec.l, height = job.n * spec.l;
        SystemMatrix sys = assemble_elasticity(mesh, dofs, id.materials.by_id());
        ConstraintSet cs;
        apply_bending_u_bcs(cs, mesh, dofs, cfg, length, rotation);
        if (!rotation) add_bending_traction(sys, mesh, dofs, cfg, height);
        const SolutionField sol = solve_spd(sys, cs);
        const BendingStiffness bs = bending_stiffness(mesh, dofs, sys, sol, length);
        SweepRow row = base_row(cfg, job);
        row.d_eff = bs.from_moment;
        row.d_eff_deflection = bs.from_deflection;
        row.d_over_dmacro = bs.from_moment / (d_macro_modulus * std::pow(height, 3) / 12.0);
        row.kappa_fit = bs.kappa_fit;
        row.moment = bs.moment_left;
        row.energy = total_energy(sys, sol);
        if (cfg.vtk)
            write_vtk_fields(mesh, dofs, id.materials.by_id(), sol,
                             cfg.out_dir + "/" + cfg.scenario + "_n" + std::to_string(job.n) + ".vtk");
        return row;
    };
    SweepResult out;
    out.rows = run_jobs(cfg, jobs, work);
    return out;
}

SweepResult run_bending_rmm(const ScenarioConfig& cfg, const IdentifiedParams& id) {
    const bool rotation = cfg.loading == "rotation";
    const RmmBeamContext ctx = make_rmm_beam(cfg, id.cell.l);
    const PenaltyPlan plan = bending_penalty_plan(cfg.bc);
    const double pi_macro = classical_beam_energy(ctx, cfg, id.c_macro, rotation);
    const double d_macro =
        plane_strain_bending_modulus(id.c_macro) * std::pow(ctx.height, 3) / 12.0;
    auto work = [&](const RowJob& job) {
        const RmmMaterial mat = rmm_material(id, cfg, job);
        SystemMatrix sys = assemble_rmm(ctx.mesh, ctx.dofs, mat);
        ConstraintSet cs;
        for (const auto& [tag, mask] : plan.edges)
            add_consistent_coupling_penalty(sys, ctx.mesh, ctx.dofs, tag, mat.kappa1, mask, cs);
        apply_bending_u_bcs(cs, ctx.mesh, ctx.dofs, cfg, ctx.length, rotation);
        if (!rotation) add_bending_traction(sys, ctx.mesh, ctx.dofs, cfg, ctx.height);
        const SolutionField sol = solve_spd(sys, cs);

        // the algebraic energy and edge reactions of extreme-penalty systems
        // cancel catastrophically; quadrature sums every term positively
        double strain_energy = rmm_energy_by_quadrature(ctx.mesh, ctx.dofs, mat, sol);
        for (const auto& [tag, mask] : plan.edges)
            strain_energy +=
                coupling_penalty_energy(ctx.mesh, ctx.dofs, tag, mat.kappa1, mask, sol.d);

        SweepRow row = base_row(cfg, job);
        row.kappa_fit = fit_curvature(ctx.mesh, ctx.dofs, sol, ctx.length);
        if (rotation) {
            // displacement-driven: Pi = M theta / 2 exactly
            const double theta = 0.5 * cfg.kappa * ctx.length;
            row.moment = 2.0 * strain_energy / theta;
            row.energy = strain_energy;
        } else {
            // the applied end moment is known from the traction profile
            row.moment = cfg.traction * ctx.height * ctx.height / 6.0;
            row.energy = strain_energy - sol.d.dot(sys.rhs);
        }
        const double w0 = mean_uy(ctx.mesh, ctx.dofs, sol, ctx.mesh.tag_nodes("left"));
        row.d_eff = row.moment / std::abs(row.kappa_fit);
        row.d_eff_deflection = row.moment * ctx.length * ctx.length / (2.0 * std::abs(w0));
        row.d_over_dmacro = row.d_eff / d_macro;
        row.pi_over_pi_macro = row.energy / pi_macro;
        if (cfg.vtk) {
            std::ostringstream name;
            name << cfg.out_dir << "/" << cfg.scenario << "_n" << job.n << "_lc" << job.lc
                 << "_muc" << job.mu_c << ".vtk";
            write_vtk_fields(ctx.mesh, ctx.dofs, mat, sol, name.str());
        }
        return row;
    };
    SweepResult out;
    out.rows = run_jobs(cfg, job_grid(cfg), work);
    return out;
}

SweepResult run_cosserat_limit(const ScenarioConfig& cfg, const IdentifiedParams& id) {
    if (cfg.candidate != "cosserat-limit")
        throw std::runtime_error("run_cosserat_limit needs the cosserat-limit candidate");
    return run_bending_rmm(cfg, id);
}

SweepResult run_shear(const ScenarioConfig& cfg, const IdentifiedParams& id) {
    const bool resolved = cfg.scenario == "shear-resolved";
    const double a = cfg.shear_amplitude;
    auto shear_u = [a](const Eigen::Vector2d& x) { return Eigen::Vector2d(a * x.y(), 0.0); };
    Eigen::Matrix2d grad;
    grad << 0.0, a, 0.0, 0.0;

    std::vector<RowJob> jobs = resolved ? std::vector<RowJob>{} : job_grid(cfg);
    if (resolved) {
        int idx = 0;
        for (int n : cfg.sizes) jobs.push_back({n, 0.0, 0.0, idx++});
    }
    std::optional<RmmBeamContext> ctx;
    if (!resolved) ctx.emplace(make_rmm_beam(cfg, id.cell.l));

    auto work = [&](const RowJob& job) {
        SweepRow row = base_row(cfg, job);
        double energy, length, height;
        if (resolved) {
            UnitCellSpec spec = id.cell;
            spec.refinement = cfg.refinement;
            const Mesh2D mesh = build_beam_mesh(job.n, spec);
            const DofMap dofs = make_elastic_dofmap(mesh);
            length = 12.0 * job.n * spec.l;
            height = job.n * spec.l;
            const SystemMatrix sys = assemble_elasticity(mesh, dofs, id.materials.by_id());
            ConstraintSet cs;
            apply_dirichlet_u(cs, mesh, dofs, "boundary", shear_u);
            const SolutionField sol = solve_spd(sys, cs);
            energy = total_energy(sys, sol);
        } else {
            length = ctx->length;
            height = ctx->height;
            const RmmMaterial mat = rmm_material(id, cfg, job);
            const SystemMatrix sys = assemble_rmm(ctx->mesh, ctx->dofs, mat);
            ConstraintSet cs;
            apply_dirichlet_u(cs, ctx->mesh, ctx->dofs, "boundary", shear_u);
            apply_dirichlet_p_tangential(cs, ctx->mesh, ctx->dofs, "boundary",
                                         [&grad](const Eigen::Vector2d&) { return grad; });
            const SolutionField sol = solve_spd(sys, cs);
            energy = total_energy(sys, sol);
        }
        // energy-equivalent shear force: Pi = 1/2 T (a H) for the
        // displacement-driven problem
        const double t_eff = 2.0 * energy / (a * height);
        row.energy = energy;
        row.t_over_tmacro = t_eff / (a * id.c_macro.mu_star * length);
        return row;
    };
    SweepResult out;
    out.rows = run_jobs(cfg, jobs, work);
    return out;
}

SweepResult run_cantilever(const ScenarioConfig& cfg, const IdentifiedParams& id) {
    const bool resolved = cfg.scenario == "cantilever-resolved";
    const double tbar = cfg.cantilever_traction;
    const double e_macro = plane_strain_bending_modulus(id.c_macro);

    std::vector<RowJob> jobs;
    if (resolved) {
        int idx = 0;
        for (int n : cfg.sizes) jobs.push_back({n, 0.0, 0.0, idx++});
    } else {
        jobs = job_grid(cfg);
    }
    std::optional<RmmBeamContext> ctx;
    if (!resolved) ctx.emplace(make_rmm_beam(cfg, id.cell.l));

    auto work = [&](const RowJob& job) {
        SweepRow row = base_row(cfg, job);
        double w0, length, height;
        if (resolved) {
            UnitCellSpec spec = id.cell;
            spec.refinement = cfg.refinement;
            const Mesh2D mesh = build_beam_mesh(job.n, spec);
            const DofMap dofs = make_elastic_dofmap(mesh);
            length = 12.0 * job.n * spec.l;
            height = job.n * spec.l;
            SystemMatrix sys = assemble_elasticity(mesh, dofs, id.materials.by_id());
            ConstraintSet cs;
            apply_dirichlet_u(cs, mesh, dofs, "right",
                              [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero(); });
            add_traction(sys, mesh, dofs, "left",
                         [tbar](const Eigen::Vector2d&) { return Eigen::Vector2d(0.0, tbar); });
            const SolutionField sol = solve_spd(sys, cs);
            w0 = mean_uy(mesh, dofs, sol, mesh.tag_nodes("left"));
            row.energy = total_energy(sys, sol);
        } else {
            length = ctx->length;
            height = ctx->height;
            const RmmMaterial mat = rmm_material(id, cfg, job);
            SystemMatrix sys = assemble_rmm(ctx->mesh, ctx->dofs, mat);
            ConstraintSet cs;
            apply_dirichlet_u(cs, ctx->mesh, ctx->dofs, "right",
                              [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero(); });
            apply_dirichlet_p_tangential(cs, ctx->mesh, ctx->dofs, "right",
                                         [](const Eigen::Vector2d&) {
                                             return Eigen::Matrix2d::Zero().eval();
                                         });
            RowMask side_mask;
            if (cfg.bc == "cc-whole-boundary") side_mask = RowMask::both;
            else if (cfg.bc == "cc-partial-y") side_mask = RowMask::y_row;
            else throw std::runtime_error("cantilever-rmm supports cc-whole-boundary or cc-partial-y");
            add_consistent_coupling_penalty(sys, ctx->mesh, ctx->dofs, "left", mat.kappa1,
                                            RowMask::both, cs);
            add_consistent_coupling_penalty(sys, ctx->mesh, ctx->dofs, "top", mat.kappa1,
                                            side_mask, cs);
            add_consistent_coupling_penalty(sys, ctx->mesh, ctx->dofs, "bottom", mat.kappa1,
                                            side_mask, cs);
            add_traction(sys, ctx->mesh, ctx->dofs, "left",
                         [tbar](const Eigen::Vector2d&) { return Eigen::Vector2d(0.0, tbar); });
            const SolutionField sol = solve_spd(sys, cs);
            w0 = mean_uy(ctx->mesh, ctx->dofs, sol, ctx->mesh.tag_nodes("left"));
            double strain_energy = rmm_energy_by_quadrature(ctx->mesh, ctx->dofs, mat, sol);
            strain_energy += coupling_penalty_energy(ctx->mesh, ctx->dofs, "left", mat.kappa1,
                                                     RowMask::both, sol.d);
            strain_energy += coupling_penalty_energy(ctx->mesh, ctx->dofs, "top", mat.kappa1,
                                                     side_mask, sol.d);
            strain_energy += coupling_penalty_energy(ctx->mesh, ctx->dofs, "bottom", mat.kappa1,
                                                     side_mask, sol.d);
            row.energy = strain_energy - sol.d.dot(sys.rhs);
        }
        const double force = tbar * height;
        const double w_macro = 4.0 * force * std::pow(length, 3) / (e_macro * std::pow(height, 3));
        row.w_macro_over_w = w_macro / w0;
        return row;
    };
    SweepResult out;
    out.rows = run_jobs(cfg, jobs, work);
    return out;
}

SweepResult run_scenario(const ScenarioConfig& cfg, const IdentifiedParams& id) {
    if (cfg.sizes.empty() || cfg.lc.empty() || cfg.mu_c.empty())
        throw std::runtime_error("sweep lists (n, lc, mu_c) must be non-empty");
    if (cfg.scenario == "bending-resolved") return run_bending_resolved(cfg, id);
    if (cfg.scenario == "bending-rmm") return run_bending_rmm(cfg, id);
    if (cfg.scenario == "shear-resolved" || cfg.scenario == "shear-rmm") return run_shear(cfg, id);
    if (cfg.scenario == "cantilever-resolved" || cfg.scenario == "cantilever-rmm")
        return run_cantilever(cfg, id);
    throw std::runtime_error("unknown scenario '" + cfg.scenario + "'");
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

namespace {

void print_identified(const IdentifiedParams& id) {
    auto gpa = [](const CubicParams& c) {
        std::ostringstream os;
        os.precision(4);
        os << "(lambda " << c.lambda / 1e9 << ", mu " << c.mu / 1e9 << ", mu* " << c.mu_star / 1e9
           << ") GPa";
        return os.str();
    };
    std::cout << "c_macro  " << gpa(id.c_macro) << "  off-cubic residual " << id.c_macro_residual
              << "\n";
    for (int v = 1; v <= 4; ++v)
        std::cout << "apparent variant " << v << "  "
                  << gpa(id.apparent[static_cast<size_t>(v - 1)]) << "\n";
    std::cout << "lowner   " << gpa(id.lowner) << "\nalpha    " << id.alpha << "\n";
    for (const auto& [n, beta] : id.beta_clusters)
        std::cout << "beta " << n << "x" << n << "  " << beta << "\n";
    for (const Candidate& c : id.candidates)
        std::cout << "candidate " << c.name << ": micro " << gpa(c.c_micro) << ", coupling "
                  << gpa(c.c_e) << "\n";
}

int run_identify_command(const ScenarioConfig& cfg) {
    UnitCellSpec cell = cfg.cell;
    cell.refinement = cfg.refinement;
    const IdentifiedParams id =
        run_identification(cell, cfg.materials(), cfg.macro_variant, cfg.beta_refinement);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/identified_params.txt";
    write_report(id, path);
    print_identified(id);
    std::cout << "report written to " << path << "\n";
    return 0;
}

int run_run_command(ScenarioConfig& cfg, const std::vector<double>& mu_c_rel) {
    if (cfg.scenario == "identify") return run_identify_command(cfg);
    std::string report = cfg.report_path;
    if (report.empty()) report = cfg.out_dir + "/identified_params.txt";
    const IdentifiedParams id = read_report(report);
    if (!mu_c_rel.empty()) {
        cfg.mu_c.clear();
        for (double r : mu_c_rel) cfg.mu_c.push_back(r * id.c_macro.mu);
    }
    const SweepResult result = run_scenario(cfg, id);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string csv = cfg.out_dir + "/" + cfg.scenario + ".csv";
    write_csv(result, csv);
    std::cout << result.rows.size() << " rows written to " << csv << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"plane-strain FEM toolkit for size effects of metamaterial beams"};
    app.require_subcommand(1);

    ScenarioConfig cfg;
    std::string config_path, lc_log, cell_name;
    std::vector<double> lc_rel, mu_c_rel;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", cfg.out_dir, "output directory");
        cmd->add_option("--threads", cfg.threads, "parallel sweep workers");
        cmd->add_option("--refine", cfg.refinement, "unit-cell mesh refinement");
        cmd->add_option("--cell-l", cfg.cell.l, "cell edge length [m]");
        cmd->add_option("--cell-d", cfg.cell.d, "inclusion diameter [m]");
        cmd->add_option("--matrix-young", cfg.matrix_young, "matrix Young modulus [Pa]");
        cmd->add_option("--matrix-poisson", cfg.matrix_poisson, "matrix Poisson ratio");
        cmd->add_option("--inclusion-young", cfg.inclusion_young, "inclusion Young modulus [Pa]");
        cmd->add_option("--inclusion-poisson", cfg.inclusion_poisson, "inclusion Poisson ratio");
    };

    CLI::App* identify = app.add_subcommand("identify", "run the material identification pipeline");
    add_common(identify);
    identify->add_option("--cell", cell_name, "unit-cell variant for the macro tensor (variant1..4)");
    identify->add_option("--beta-refine", cfg.beta_refinement, "cluster refinement for beta");

    CLI::App* run = app.add_subcommand("run", "run a scenario sweep");
    add_common(run);
    run->add_option("--config", config_path, "scenario config file");
    run->add_option("--scenario", cfg.scenario, "scenario kind");
    run->add_option("--n", cfg.sizes, "size indices")->delimiter(',');
    run->add_option("--loading", cfg.loading, "rotation | traction");
    run->add_option("--candidate", cfg.candidate, "micro-tensor candidate name");
    run->add_option("--lc-sweep", cfg.lc, "characteristic lengths [m]")->delimiter(',');
    run->add_option("--lc-sweep-rel", lc_rel, "characteristic lengths [cell edges]")->delimiter(',');
    run->add_option("--lc-log", lc_log, "log sweep lo_rel,hi_rel,points relative to l");
    run->add_option("--mu-c", cfg.mu_c, "Cosserat couple moduli [Pa]")->delimiter(',');
    run->add_option("--mu-c-rel", mu_c_rel, "couple moduli [mu_macro]")->delimiter(',');
    run->add_option("--mu-curv", cfg.mu_curv, "curvature shear modulus [Pa]");
    run->add_option("--bc", cfg.bc, "consistent-coupling scenario");
    run->add_option("--kappa", cfg.kappa, "applied curvature [1/m]");
    run->add_option("--traction", cfg.traction, "bending traction amplitude [N/m]");
    run->add_option("--shear-amplitude", cfg.shear_amplitude, "shear amplitude");
    run->add_option("--cantilever-traction", cfg.cantilever_traction, "cantilever traction [N/m]");
    run->add_option("--rmm-nx", cfg.rmm_nx, "beam grid elements along the length");
    run->add_option("--rmm-ny", cfg.rmm_ny, "beam grid elements along the height");
    run->add_option("--report", cfg.report_path, "identification report path");
    run->add_option("--cell", cell_name, "unit-cell variant for identify runs");
    run->add_option("--beta-refine", cfg.beta_refinement, "cluster refinement for beta");
    run->add_flag("--vtk", cfg.vtk, "write VTK field dumps");

    CLI::App* exp = app.add_subcommand("export-mesh", "write a mesh as legacy VTK");
    std::string kind = "unit-cell", out_file = "mesh.vtk";
    int variant = 1, n = 1, nx = 4, ny = 4;
    double width = 1.0, height = 1.0;
    exp->add_option("--kind", kind, "unit-cell | beam | cluster | grid");
    exp->add_option("--variant", variant, "unit-cell variant");
    exp->add_option("--refine", cfg.refinement, "mesh refinement");
    exp->add_option("--n", n, "beam or cluster size index");
    exp->add_option("--nx", nx, "grid elements in x");
    exp->add_option("--ny", ny, "grid elements in y");
    exp->add_option("--width", width, "grid width [m]");
    exp->add_option("--height", height, "grid height [m]");
    exp->add_option("--cell-l", cfg.cell.l, "cell edge length [m]");
    exp->add_option("--cell-d", cfg.cell.d, "inclusion diameter [m]");
    exp->add_option("--out", out_file, "output file");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!config_path.empty()) {
            if (!std::filesystem::exists(config_path)) {
                std::cerr << "error: config file '" << config_path << "' not found\n";
                return 2;
            }
            ScenarioConfig from_file;
            try {
                from_file = parse_config_file(config_path);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            // start from the file, then re-apply the flags the user gave
            ScenarioConfig merged = from_file;
            std::swap(cfg, merged);
            if (run->count("--scenario")) cfg.scenario = merged.scenario;
            if (run->count("--n")) cfg.sizes = merged.sizes;
            if (run->count("--loading")) cfg.loading = merged.loading;
            if (run->count("--candidate")) cfg.candidate = merged.candidate;
            if (run->count("--lc-sweep")) cfg.lc = merged.lc;
            if (run->count("--mu-c")) cfg.mu_c = merged.mu_c;
            if (run->count("--mu-curv")) cfg.mu_curv = merged.mu_curv;
            if (run->count("--bc")) cfg.bc = merged.bc;
            if (run->count("--refine")) cfg.refinement = merged.refinement;
            if (run->count("--kappa")) cfg.kappa = merged.kappa;
            if (run->count("--traction")) cfg.traction = merged.traction;
            if (run->count("--shear-amplitude")) cfg.shear_amplitude = merged.shear_amplitude;
            if (run->count("--cantilever-traction"))
                cfg.cantilever_traction = merged.cantilever_traction;
            if (run->count("--rmm-nx")) cfg.rmm_nx = merged.rmm_nx;
            if (run->count("--rmm-ny")) cfg.rmm_ny = merged.rmm_ny;
            if (run->count("--report")) cfg.report_path = merged.report_path;
            if (run->count("--out")) cfg.out_dir = merged.out_dir;
            if (run->count("--threads")) cfg.threads = merged.threads;
            if (run->count("--vtk")) cfg.vtk = merged.vtk;
        }
        if (!cell_name.empty()) {
            if (cell_name.rfind("variant", 0) == 0) cfg.macro_variant = std::stoi(cell_name.substr(7));
            else cfg.macro_variant = std::stoi(cell_name);
        }
        if (!lc_rel.empty()) {
            cfg.lc.clear();
            for (double r : lc_rel) cfg.lc.push_back(r * cfg.cell.l);
        }
        if (!lc_log.empty()) {
            const auto parts = split_list(lc_log);
            if (parts.size() != 3) throw std::runtime_error("--lc-log expects lo,hi,points");
            cfg.lc = log_sweep(std::stod(parts[0]), std::stod(parts[1]), std::stoi(parts[2]),
                               cfg.cell.l);
        }
        cfg.cell.refinement = cfg.refinement;

        if (identify->parsed()) return run_identify_command(cfg);
        if (run->parsed()) return run_run_command(cfg, mu_c_rel);
        if (exp->parsed()) {
            UnitCellSpec spec = cfg.cell;
            spec.refinement = cfg.refinement;
            spec.variant = variant;
            Mesh2D mesh;
            if (kind == "unit-cell") mesh = build_unit_cell_mesh(spec);
            else if (kind == "beam") mesh = build_beam_mesh(n, spec);
            else if (kind == "cluster") mesh = build_cell_cluster(n, n, spec);
            else if (kind == "grid") mesh = build_structured_quad_grid(width, height, nx, ny);
            else throw std::runtime_error("unknown mesh kind '" + kind + "'");
            write_vtk(mesh, out_file);
            std::cout << mesh.n_elements() << " elements, " << mesh.n_nodes() << " nodes -> "
                      << out_file << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace rmfem
