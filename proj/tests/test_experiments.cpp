#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rmfem/experiments.hpp"

using namespace rmfem;

namespace {

const CellMaterials kMats{IsotropicParams::from_young_poisson(70e9, 0.333),
                          IsotropicParams::from_young_poisson(3.5e9, 0.333)};
const UnitCellSpec kCell{1.9e-2, 1.2e-2, 1, 2};

// one shared identification for the whole suite
const IdentifiedParams& identified() {
    static const IdentifiedParams id = run_identification(kCell, kMats, 1, 1);
    return id;
}

ScenarioConfig base_config() {
    ScenarioConfig cfg;
    cfg.cell = kCell;
    cfg.refinement = 1;
    cfg.sizes = {1};
    return cfg;
}

}  // namespace

TEST(FitCurvature, ExactParabolaAndNoiseBound) {
    const double l = kCell.l, length = 24.0 * l;
    const Mesh2D mesh =
        build_structured_quad_grid(length, 2.0 * l, 24, 2, Eigen::Vector2d(0.0, -l));
    const DofMap dofs = make_elastic_dofmap(mesh);
    const double kappa0 = 0.73;
    SolutionField sol;
    sol.d = Eigen::VectorXd::Zero(dofs.total_dofs());
    double sum_phi2 = 0.0, sum_abs_phi = 0.0;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
        const double x = mesh.nodes[static_cast<size_t>(n)].x();
        const double phi = 0.5 * (x * x - length * length);
        sol.d(dofs.u_dof(n, 1)) = kappa0 * phi;
        sum_phi2 += phi * phi;
        sum_abs_phi += std::abs(phi);
    }
    EXPECT_NEAR(fit_curvature(mesh, dofs, sol, length), kappa0, 1e-12 * kappa0);

    const double noise = 1e-4;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(-noise, noise);
    for (int n = 0; n < mesh.n_nodes(); ++n) sol.d(dofs.u_dof(n, 1)) += dist(rng);
    const double bound = noise * sum_abs_phi / sum_phi2;
    EXPECT_NEAR(fit_curvature(mesh, dofs, sol, length), kappa0, bound);
}

TEST(FitCurvature, HomogeneousBeamMatchesEulerBernoulli) {
    // homogeneous macro-tensor beam: kappa_fit = M / D_macro
    const IdentifiedParams& id = identified();
    const double l = kCell.l, length = 24.0 * l, height = 2.0 * l;
    const Mesh2D mesh =
        build_structured_quad_grid(length, height, 48, 4, Eigen::Vector2d(0.0, -l));
    const DofMap dofs = make_elastic_dofmap(mesh);
    SystemMatrix sys = assemble_elasticity(mesh, dofs, {cubic_to_voigt(id.c_macro)});
    ConstraintSet cs;
    const double kappa = 1.0, theta = 0.5 * kappa * length;
    apply_dirichlet_u(cs, mesh, dofs, "left",
                      [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero(); }, true, false);
    apply_dirichlet_u(cs, mesh, dofs, "right",
                      [theta](const Eigen::Vector2d& x) {
                          return Eigen::Vector2d(-theta * x.y(), 0.0);
                      },
                      true, false);
    int pin = -1;
    for (int n = 0; n < mesh.n_nodes(); ++n)
        if ((mesh.nodes[static_cast<size_t>(n)] - Eigen::Vector2d(length, 0.0)).norm() < 1e-9)
            pin = n;
    ASSERT_GE(pin, 0);
    cs.set_dirichlet(dofs.u_dof(pin, 1), 0.0);
    const SolutionField sol = solve_spd(sys, cs);
    const BendingStiffness bs = bending_stiffness(mesh, dofs, sys, sol, length);
    const double d_macro =
        plane_strain_bending_modulus(id.c_macro) * std::pow(height, 3) / 12.0;
    EXPECT_NEAR(bs.kappa_fit, bs.moment_left / d_macro, 0.01 * bs.kappa_fit);
    EXPECT_NEAR(bs.from_moment, d_macro, 0.01 * d_macro);
    EXPECT_NEAR(bs.from_deflection, d_macro, 0.01 * d_macro);
    EXPECT_NEAR(bs.moment_left, bs.moment_right, 1e-8 * bs.moment_left);
    // the end rotation convention makes the fitted curvature kappa / 2
    EXPECT_NEAR(bs.kappa_fit, 0.5 * kappa, 0.01);
}

TEST(ResolvedBending, SizeEffectAndRouteAgreement) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-resolved";
    cfg.sizes = {1, 2};
    const SweepResult r = run_bending_resolved(cfg, identified());
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_GT(r.rows[0].d_over_dmacro, r.rows[1].d_over_dmacro);
    EXPECT_GT(r.rows[1].d_over_dmacro, 1.0);
    for (const SweepRow& row : r.rows)
        EXPECT_NEAR(row.d_eff, row.d_eff_deflection, 0.01 * row.d_eff);
}

TEST(ResolvedBending, LoadingCaseEquivalence) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-resolved";
    const SweepResult rot = run_bending_resolved(cfg, identified());
    cfg.loading = "traction";
    const SweepResult tra = run_bending_resolved(cfg, identified());
    EXPECT_NEAR(rot.rows[0].d_over_dmacro, tra.rows[0].d_over_dmacro,
                0.005 * rot.rows[0].d_over_dmacro);
}

TEST(RmmBending, LimitsAndMonotonicity) {
    const IdentifiedParams& id = identified();
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "beta-scaled";
    cfg.bc = "cc-both-ends";
    cfg.lc = log_sweep(1e-6, 1e3, 10, kCell.l);
    const SweepResult r = run_bending_rmm(cfg, id);
    ASSERT_EQ(r.rows.size(), 10u);
    EXPECT_NEAR(r.rows.front().d_over_dmacro, 1.0, 0.01);
    const double micro_ratio = plane_strain_bending_modulus(id.candidate(cfg.candidate).c_micro) /
                               plane_strain_bending_modulus(id.c_macro);
    EXPECT_NEAR(r.rows.back().d_over_dmacro, micro_ratio, 0.03 * micro_ratio);
    for (size_t k = 1; k < r.rows.size(); ++k)
        EXPECT_GE(r.rows[k].d_over_dmacro, r.rows[k - 1].d_over_dmacro * (1.0 - 1e-3));
    // bounded stiffness: within [1 - eps, (1 + eps) micro] with eps = 1%
    for (const SweepRow& row : r.rows) {
        EXPECT_GT(row.d_over_dmacro, 1.0 - 0.01);
        EXPECT_LT(row.d_over_dmacro, micro_ratio * 1.01);
    }
}

TEST(RmmBending, InsufficientCouplingShowsNoSizeEffect) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "beta-scaled";
    cfg.lc = {1e-6 * kCell.l, 1e-1 * kCell.l, 1.0 * kCell.l, 1e3 * kCell.l};
    for (const char* bc : {"cc-left-only", "cc-right-only", "cc-none"}) {
        cfg.bc = bc;
        const SweepResult r = run_bending_rmm(cfg, identified());
        for (const SweepRow& row : r.rows)
            EXPECT_NEAR(row.d_over_dmacro, 1.0, 0.01) << bc << " lc " << row.lc;
    }
}

TEST(RmmBending, LoadingCaseEquivalence) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "beta-scaled";
    cfg.bc = "cc-both-ends";
    cfg.lc = {1e-2 * kCell.l, 1.0 * kCell.l, 1e2 * kCell.l};
    const SweepResult rot = run_bending_rmm(cfg, identified());
    cfg.loading = "traction";
    const SweepResult tra = run_bending_rmm(cfg, identified());
    for (size_t k = 0; k < rot.rows.size(); ++k)
        EXPECT_NEAR(rot.rows[k].d_over_dmacro, tra.rows[k].d_over_dmacro,
                    0.005 * rot.rows[k].d_over_dmacro);
}

TEST(RmmBending, CurvatureScalingEquivalence) {
    // (n, lc) enters only through (lc/n)^2 on the fixed domain
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "beta-scaled";
    cfg.bc = "cc-both-ends";
    cfg.sizes = {1};
    cfg.lc = {1.0 * kCell.l};
    const SweepResult a = run_bending_rmm(cfg, identified());
    cfg.sizes = {2};
    cfg.lc = {2.0 * kCell.l};
    const SweepResult b = run_bending_rmm(cfg, identified());
    EXPECT_NEAR(a.rows[0].d_over_dmacro, b.rows[0].d_over_dmacro,
                0.005 * a.rows[0].d_over_dmacro);
}

TEST(CosseratLimit, CoupleModulusHasNoInfluenceWithBothEnds) {
    const IdentifiedParams& id = identified();
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "cosserat-limit";
    cfg.bc = "cc-both-ends";
    cfg.lc = {1e-6 * kCell.l, 1.0 * kCell.l, 1e2 * kCell.l};
    cfg.mu_c = {0.0, 0.1 * id.c_macro.mu, 1.0 * id.c_macro.mu, 2.0 * id.c_macro.mu};
    const SweepResult r = run_cosserat_limit(cfg, id);
    ASSERT_EQ(r.rows.size(), 12u);
    for (size_t lc_idx = 0; lc_idx < 3; ++lc_idx) {
        const double ref = r.rows[lc_idx * 4].pi_over_pi_macro;
        for (size_t m = 1; m < 4; ++m)
            EXPECT_NEAR(r.rows[lc_idx * 4 + m].pi_over_pi_macro, ref, 0.005 * ref);
    }
    // the macro limit is independent of the candidate
    EXPECT_NEAR(r.rows[0].pi_over_pi_macro, 1.0, 0.01);
    EXPECT_THROW(
        [&] {
            ScenarioConfig bad = cfg;
            bad.candidate = "beta-scaled";
            run_cosserat_limit(bad, id);
        }(),
        std::runtime_error);
}

TEST(CosseratLimit, NoCouplingNoSizeEffect) {
    const IdentifiedParams& id = identified();
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "cosserat-limit";
    cfg.bc = "cc-none";
    cfg.lc = {1e-6 * kCell.l, 1.0 * kCell.l, 1e2 * kCell.l};
    const SweepResult r = run_cosserat_limit(cfg, id);
    for (const SweepRow& row : r.rows) EXPECT_NEAR(row.pi_over_pi_macro, 1.0, 0.01);
}

TEST(Shear, HomogeneousMacroMediumIsExact) {
    // classical elasticity with the macro tensor under affine shear: the
    // uniform state is in the FE space, so T equals a mu* L to solver accuracy
    const IdentifiedParams& id = identified();
    const double l = kCell.l, length = 12.0 * l, height = 1.0 * l, a = 0.01;
    const Mesh2D mesh =
        build_structured_quad_grid(length, height, 24, 2, Eigen::Vector2d(0.0, -0.5 * height));
    const DofMap dofs = make_elastic_dofmap(mesh);
    const SystemMatrix sys = assemble_elasticity(mesh, dofs, {cubic_to_voigt(id.c_macro)});
    ConstraintSet cs;
    apply_dirichlet_u(cs, mesh, dofs, "boundary",
                      [a](const Eigen::Vector2d& x) { return Eigen::Vector2d(a * x.y(), 0.0); });
    const SolutionField sol = solve_spd(sys, cs);
    const double t_eff = 2.0 * total_energy(sys, sol) / (a * height);
    EXPECT_NEAR(t_eff, a * id.c_macro.mu_star * length, 1e-9 * a * id.c_macro.mu_star * length);
}

TEST(Shear, ResolvedSizeEffectWeakerThanBending) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "shear-resolved";
    cfg.sizes = {1, 2};
    const SweepResult shear = run_shear(cfg, identified());
    cfg.scenario = "bending-resolved";
    const SweepResult bend = run_bending_resolved(cfg, identified());
    ASSERT_EQ(shear.rows.size(), 2u);
    EXPECT_GT(shear.rows[0].t_over_tmacro, 1.0);
    EXPECT_GT(shear.rows[0].t_over_tmacro, shear.rows[1].t_over_tmacro);
    EXPECT_LT(shear.rows[0].t_over_tmacro - 1.0, bend.rows[0].d_over_dmacro - 1.0);
}

TEST(Shear, RmmMicroLimit) {
    const IdentifiedParams& id = identified();
    ScenarioConfig cfg = base_config();
    cfg.scenario = "shear-rmm";
    cfg.candidate = "beta-scaled";
    cfg.lc = {1e-6 * kCell.l, 1e3 * kCell.l};
    const SweepResult r = run_shear(cfg, id);
    const double micro_ratio =
        id.candidate(cfg.candidate).c_micro.mu_star / id.c_macro.mu_star;
    EXPECT_NEAR(r.rows.front().t_over_tmacro, 1.0, 0.01);
    EXPECT_NEAR(r.rows.back().t_over_tmacro, micro_ratio, 0.03 * micro_ratio);
}

TEST(Cantilever, MacroBeamTheoryAgreement) {
    // homogeneous macro cantilever at slenderness 12
    const IdentifiedParams& id = identified();
    ScenarioConfig cfg = base_config();
    cfg.scenario = "cantilever-rmm";
    cfg.bc = "cc-partial-y";
    cfg.candidate = "beta-scaled";
    cfg.lc = {1e-6 * kCell.l};
    const SweepResult r = run_cantilever(cfg, id);
    EXPECT_NEAR(r.rows[0].w_macro_over_w, 1.0, 0.02);
}

TEST(Cantilever, PartialCouplingAvoidsBoundaryLayerBlowup) {
    const IdentifiedParams& id = identified();
    ScenarioConfig cfg = base_config();
    cfg.scenario = "cantilever-rmm";
    cfg.candidate = "beta-scaled";
    cfg.lc = {1e-3 * kCell.l};

    auto ratio_at = [&](const char* bc, int nx) {
        cfg.bc = bc;
        cfg.rmm_nx = nx;
        cfg.rmm_ny = nx / 12;
        return run_cantilever(cfg, id).rows[0].w_macro_over_w;
    };
    const double part48 = ratio_at("cc-partial-y", 48);
    const double part96 = ratio_at("cc-partial-y", 96);
    const double whole48 = ratio_at("cc-whole-boundary", 48);
    const double whole96 = ratio_at("cc-whole-boundary", 96);
    // partial coupling is mesh-insensitive
    EXPECT_NEAR(part48, part96, 0.002 * part48);
    // the whole-boundary artifact shrinks roughly first order in h; its
    // mesh-converged value agrees with the partial variant within 1%
    EXPECT_LT(std::abs(whole96 - part96), 0.7 * std::abs(whole48 - part48));
    const double whole_extrapolated = 2.0 * whole96 - whole48;
    EXPECT_NEAR(whole_extrapolated, part96, 0.01 * part96);
}

TEST(Cantilever, ResolvedSizeEffect) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "cantilever-resolved";
    cfg.sizes = {1, 2};
    const SweepResult r = run_cantilever(cfg, identified());
    EXPECT_GT(r.rows[0].w_macro_over_w, r.rows[1].w_macro_over_w);
    EXPECT_GT(r.rows[1].w_macro_over_w, 1.0);
}

TEST(Config, EmptySweepListRejected) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.lc.clear();
    EXPECT_THROW(run_scenario(cfg, identified()), std::runtime_error);
}

TEST(Config, ParseFieldsAndErrors) {
    const std::string text = R"(
# comment
scenario = bending-rmm
n = 1,2
loading = traction
candidate = matrix
lc = 1.9e-8, 1.9e-2
mu_c = 0.0
bc = cc-whole-boundary
refinement = 3
kappa = 2.5
rmm_nx = 96
cell_l = 1.9e-2
threads = 4
vtk = true
)";
    const ScenarioConfig cfg = parse_config_text(text);
    EXPECT_EQ(cfg.scenario, "bending-rmm");
    EXPECT_EQ(cfg.sizes, (std::vector<int>{1, 2}));
    EXPECT_EQ(cfg.loading, "traction");
    EXPECT_EQ(cfg.candidate, "matrix");
    ASSERT_EQ(cfg.lc.size(), 2u);
    EXPECT_DOUBLE_EQ(cfg.lc[1], 1.9e-2);
    EXPECT_EQ(cfg.bc, "cc-whole-boundary");
    EXPECT_EQ(cfg.refinement, 3);
    EXPECT_EQ(cfg.cell.refinement, 3);
    EXPECT_DOUBLE_EQ(cfg.kappa, 2.5);
    EXPECT_EQ(cfg.rmm_nx, 96);
    EXPECT_EQ(cfg.threads, 4);
    EXPECT_TRUE(cfg.vtk);

    try {
        parse_config_text("scenario = x\nbogus_key = 1\n");
        FAIL() << "expected parse error";
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 2"), std::string::npos);
        EXPECT_NE(msg.find("bogus_key"), std::string::npos);
    }
    try {
        parse_config_text("kappa = notanumber\n");
        FAIL() << "expected parse error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("kappa"), std::string::npos);
    }
    EXPECT_THROW(parse_config_file("does_not_exist.cfg"), std::runtime_error);
}

TEST(Csv, SchemaAndPlaceholders) {
    SweepResult result;
    SweepRow row;
    row.scenario = "bending-rmm";
    row.candidate = "matrix";
    row.loading = "rotation";
    row.bc = "cc-both-ends";
    row.n = 2;
    row.lc = 1.9e-2;
    row.d_over_dmacro = 1.25;
    result.rows.push_back(row);
    const std::string path = "test_sweep.csv";
    write_csv(result, path);
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    EXPECT_EQ(header,
              "scenario,candidate,loading,bc,n,lc,mu_c,d_eff,d_eff_deflection,d_over_dmacro,"
              "kappa_fit,moment,energy,pi_over_pi_macro,t_over_tmacro,w_macro_over_w");
    std::getline(in, line);
    EXPECT_NE(line.find("bending-rmm,matrix,rotation,cc-both-ends,2,0.019,0,,,1.25"),
              std::string::npos);
    std::remove(path.c_str());
}

TEST(Threads, ParallelRowsMatchSerial) {
    ScenarioConfig cfg = base_config();
    cfg.scenario = "bending-rmm";
    cfg.candidate = "beta-scaled";
    cfg.bc = "cc-both-ends";
    cfg.lc = {1e-4 * kCell.l, 1e-1 * kCell.l, 1.0 * kCell.l, 1e1 * kCell.l};
    const SweepResult serial = run_bending_rmm(cfg, identified());
    cfg.threads = 2;
    const SweepResult parallel = run_bending_rmm(cfg, identified());
    ASSERT_EQ(serial.rows.size(), parallel.rows.size());
    for (size_t k = 0; k < serial.rows.size(); ++k) {
        EXPECT_EQ(serial.rows[k].lc, parallel.rows[k].lc);
        EXPECT_EQ(serial.rows[k].d_over_dmacro, parallel.rows[k].d_over_dmacro);
        EXPECT_EQ(serial.rows[k].energy, parallel.rows[k].energy);
    }
}

TEST(Cli, ExitCodesAndArtifacts) {
    namespace fs = std::filesystem;
    const std::string dir = "cli_test_out";
    fs::remove_all(dir);
    fs::create_directories(dir);

    {
        const char* argv[] = {"rmfem", "run", "--config", "missing_config.cfg"};
        EXPECT_EQ(cli_main(4, argv), 2);
    }
    {
        std::ofstream bad(dir + "/bad.cfg");
        bad << "nonsense_key = 1\n";
        bad.close();
        const std::string cfg_path = dir + "/bad.cfg";
        const char* argv[] = {"rmfem", "run", "--config", cfg_path.c_str()};
        EXPECT_EQ(cli_main(4, argv), 2);
    }
    {
        const std::string out = dir + "/cell.vtk";
        const char* argv[] = {"rmfem", "export-mesh", "--kind", "unit-cell", "--refine", "1",
                              "--out", out.c_str()};
        EXPECT_EQ(cli_main(8, argv), 0);
        EXPECT_TRUE(fs::exists(out));
    }
    {
        // identification report, then a sweep consuming it
        const char* argv[] = {"rmfem", "identify", "--refine", "1", "--beta-refine", "1",
                              "--out", dir.c_str()};
        EXPECT_EQ(cli_main(8, argv), 0);
        EXPECT_TRUE(fs::exists(dir + "/identified_params.txt"));

        std::ofstream cfg_file(dir + "/sweep.cfg");
        cfg_file << "scenario = bending-rmm\ncandidate = beta-scaled\nbc = cc-both-ends\n"
                 << "lc = 1.9e-4\nreport = " << dir << "/identified_params.txt\nout = " << dir
                 << "\n";
        cfg_file.close();
        const std::string cfg_path = dir + "/sweep.cfg";
        const char* argv2[] = {"rmfem", "run", "--config", cfg_path.c_str()};
        EXPECT_EQ(cli_main(4, argv2), 0);
        EXPECT_TRUE(fs::exists(dir + "/bending-rmm.csv"));
    }
    {
        // run without an identification report fails with a diagnostic
        const char* argv[] = {"rmfem", "run", "--scenario", "bending-rmm", "--out",
                              "cli_test_out_nope"};
        EXPECT_EQ(cli_main(6, argv), 1);
    }
    {
        // the identification pipeline is also reachable as a run scenario
        const char* argv[] = {"rmfem", "run",          "--scenario",   "identify",
                              "--cell", "variant1",    "--refine",     "1",
                              "--beta-refine", "1",    "--out",        dir.c_str()};
        EXPECT_EQ(cli_main(12, argv), 0);
    }
    fs::remove_all(dir);
    fs::remove_all("cli_test_out_nope");
}
