// Command-line front end: scenario runs, operator-boundedness and norm
// verification suites, dyadic-block reports and Lagrangian checks.
//
//   nematic simulate --config runs/stationary_director.toml
//   nematic verify duhamel --lemma 2.2 --trials 50
//   nematic verify besov
//   nematic verify lagrangian --in out/taylor_green
//   nematic verify all --in out/taylor_green
//   nematic besov report out/tg/u_0000.elf --index -0.5,2,2 --heat
//   nematic lagrangian --in out/taylor_green --check identities

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "nematic/config.hpp"
#include "nematic/diagnostics.hpp"
#include "nematic/io.hpp"
#include "nematic/lagrangian.hpp"
#include "nematic/scenarios.hpp"

namespace fs = std::filesystem;
using namespace nematic;

namespace {

int g_exit = 0;

void verdict_line(std::ostream& os, bool pass, const std::string& what, double value,
                  const std::string& bound) {
    os << (pass ? "[PASS] " : "[FAIL] ") << what << ": " << value << " (" << bound << ")\n";
    if (!pass) g_exit = 1;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(const std::string& config_path, const std::string& out_override) {
    auto cfg = config::Config::parse_file(config_path);

    Grid g(static_cast<int>(cfg.get_int("grid", "dim", 2)),
           static_cast<int>(cfg.get_int("grid", "M", 64)),
           cfg.get_double("grid", "L", two_pi));
    PhysicalConstants pc;
    pc.nu = cfg.get_double("constants", "nu", 1.0);
    pc.lambda = cfg.get_double("constants", "lambda", 1.0);
    pc.gamma = cfg.get_double("constants", "gamma", 1.0);
    pc.validate();

    // initial data: built-in scenario or explicit snapshot paths
    SpectralField a0, u0, d0;
    solver::SolveConfig sconf;
    if (cfg.has("data", "scenario")) {
        std::map<std::string, std::string> params;
        for (const auto& [k, v] : cfg.sections().at("data"))
            if (k != "scenario") params[k] = v;
        auto sc = scenarios::make_scenario(cfg.get_string("data", "scenario"), g, pc, params);
        a0 = std::move(sc.a0);
        u0 = std::move(sc.u0);
        d0 = std::move(sc.d0);
        sconf = sc.defaults;
    } else {
        a0 = io::read_elf1(cfg.get_string("data", "a0")).field;
        u0 = io::read_elf1(cfg.get_string("data", "u0")).field;
        d0 = io::read_elf1(cfg.get_string("data", "d0")).field;
    }
    sconf.constants = pc;
    sconf.r = cfg.get_double("scheme", "r", sconf.r);
    sconf.p = cfg.get_double("scheme", "p", sconf.p);
    sconf.T = cfg.get_double("scheme", "T", sconf.T);
    sconf.dt = cfg.get_double("scheme", "dt", sconf.dt);
    sconf.tol = cfg.get_double("scheme", "tol", sconf.tol);
    sconf.n_max = static_cast<int>(cfg.get_int("scheme", "n_max", sconf.n_max));
    sconf.c0 = cfg.get_double("scheme", "c0", sconf.c0);
    sconf.normalize_director =
        cfg.get_bool("scheme", "normalize_director", sconf.normalize_director);
    sconf.p1 = cfg.get_double("scheme", "p1", sconf.p1);
    sconf.p3 = cfg.get_double("scheme", "p3", sconf.p3);
    sconf.regularize_level =
        static_cast<int>(cfg.get_int("scheme", "regularize_level", sconf.regularize_level));
    {
        std::string mode = cfg.get_string("scheme", "smallness",
                                          sconf.enforce_smallness ? "enforce" : "warn");
        if (mode == "enforce") sconf.enforce_smallness = true;
        else if (mode == "warn") sconf.enforce_smallness = false;
        else throw std::runtime_error("[scheme] smallness must be 'enforce' or 'warn'");
    }

    fs::path out = out_override.empty()
                       ? fs::path(cfg.get_string("output", "directory", "out"))
                       : fs::path(out_override);
    int stride = static_cast<int>(cfg.get_int("output", "snapshot_stride", 1));
    fs::create_directories(out);

    // archive the resolved configuration beside the outputs
    {
        config::Config resolved = cfg;
        resolved.set("output", "directory", out.string());
        std::ofstream os(out / "resolved.toml");
        os << resolved.to_string();
    }

    auto result = solver::picard_solve(a0, u0, d0, sconf);
    if (!result.smallness_ok)
        std::cerr << "warning: smallness eta = " << result.eta << " exceeds c0 = "
                  << sconf.c0 << " (warn-only mode)\n";

    io::save_trajectory(out, result.trajectory, stride);

    // iterations.csv: n, delta_U and its pieces
    {
        std::vector<std::vector<double>> rows;
        for (const auto& r : result.reports)
            rows.push_back({static_cast<double>(r.n), r.delta_U, r.d_sup, r.ledger_total,
                            r.tail_term, r.converged ? 1.0 : 0.0});
        io::write_csv(out / "iterations.csv",
                      {"n", "delta_U", "d_sup", "ledger", "tail", "converged"}, rows);
    }

    // ledger.csv: itemized trajectory norm of the converged solution
    {
        solver::NormLedger led;
        if (sconf.r < 2.0) {
            led = solver::x_norm_ledger(result.trajectory, sconf.r);
        } else {
            double p1 = sconf.p1, p3 = sconf.p3;
            if (p1 == 0.0 || p3 == 0.0)
                std::tie(p1, p3) = solver::default_weighted_exponents(g.dim, sconf.r, sconf.p);
            led = solver::y_norm_ledger(
                result.trajectory,
                duhamel::WeightedExponentTable::make(g.dim, sconf.r, p1, p3));
        }
        auto rows = led.components;
        rows.emplace_back("total", led.total);
        rows.emplace_back("eta", result.eta);
        io::write_labeled_csv(out / "ledger.csv", "component", "value", rows);
    }

    // diagnostics.csv: energy balance and constraint monitors per time
    {
        auto diag = diagnostics::energy_report(result.trajectory);
        std::vector<std::vector<double>> rows;
        for (const auto& r : diag)
            rows.push_back({r.time, r.energy, r.dissipation, r.dedt, r.balance_residual,
                            r.div_norm, r.sphere_drift, r.a_max});
        io::write_csv(out / "diagnostics.csv",
                      {"time", "energy", "dissipation", "dedt", "balance_residual",
                       "div_norm", "sphere_drift", "a_max"},
                      rows);
    }

    std::cout << (result.converged ? "converged" : "NOT converged") << " after "
              << result.reports.size() << " iterations, eta = " << result.eta << "\n";
    return result.converged ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify duhamel
// ---------------------------------------------------------------------------

int run_verify_duhamel(const std::string& lemma, int trials, const std::string& out_dir) {
    auto check = duhamel::parse_check(lemma);
    const double r = 1.5, p1 = 1.75, p3 = 12.0;
    const double eps = (check == duhamel::BoundednessCheck::weighted_kernel_eps ||
                        check == duhamel::BoundednessCheck::weighted_grad_eps)
                           ? 0.05
                           : 0.0;

    struct Res { int m, k; double max_ratio; };
    std::vector<Res> levels;
    std::vector<std::pair<std::string, double>> csv;
    for (int level = 0; level < 2; ++level) {
        int m = 16 << level, steps = 24 << level;
        Grid g(2, m);
        auto table = duhamel::WeightedExponentTable::make(2, r, p1, p3, eps);
        auto family = duhamel::random_family(g, 1, 3, trials, steps, 0.5, 97);
        auto rep = duhamel::weighted_bound_report(check, table, family);
        levels.push_back({m, steps, rep.max_ratio});
        for (const auto& row : rep.rows)
            csv.emplace_back("M" + std::to_string(m) + "/trial" + std::to_string(row.trial),
                             row.ratio);
        if (!rep.all_finite) {
            std::cout << "[FAIL] check " << lemma << ": non-finite ratio\n";
            return 1;
        }
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        io::write_labeled_csv(fs::path(out_dir) / ("duhamel_" + lemma + ".csv"), "trial",
                              "ratio", csv);
    }
    double drift = std::abs(levels[1].max_ratio - levels[0].max_ratio) /
                   std::max(levels[0].max_ratio, 1e-30);
    bool pass = drift < 0.2;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "check " << lemma
              << ": max ratio " << levels[0].max_ratio << " -> " << levels[1].max_ratio
              << " under doubling (drift " << drift * 100 << "%, bound 20%)\n";
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify besov
// ---------------------------------------------------------------------------

int run_verify_besov(int trials, const std::string& out_dir) {
    std::vector<std::pair<std::string, double>> csv;
    bool all_pass = true;
    for (int m : {32, 64}) {
        Grid g(2, m);
        std::mt19937_64 rng(1234 + m);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        double worst_recon = 0.0, lo = 1e30, hi = 0.0;
        for (int t = 0; t < trials; ++t) {
            SpectralField f(g, 1);
            double* p = f.component_data(0);
            std::fill(p, p + g.size(), 0.0);
            for (int kx = 0; kx <= 5; ++kx)
                for (int ky = -5; ky <= 5; ++ky) {
                    if (kx == 0 && ky <= 0) continue;
                    double a = unif(rng), b = unif(rng);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        auto ix = g.unflatten(i);
                        double ph = two_pi / g.length *
                                    (kx * g.coord(ix[0]) + ky * g.coord(ix[1]));
                        p[i] += a * std::cos(ph) + b * std::sin(ph);
                    }
                }
            auto dec = besov::dyadic_blocks(f);
            SpectralField sum(g, 1);
            for (auto& [q, blk] : dec.blocks) sum = sum + blk;
            worst_recon = std::max(worst_recon, max_abs_diff(sum, f) / linf_norm(f));

            besov::BesovIndex idx(-1.0, 2.0, 2.0);
            double ratio = besov::heat_characterization_norm(
                               f, idx, besov::default_heat_time_grid(g)) /
                           besov::besov_norm(f, idx);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        csv.emplace_back("M" + std::to_string(m) + "/reconstruction", worst_recon);
        csv.emplace_back("M" + std::to_string(m) + "/heat_ratio_lo", lo);
        csv.emplace_back("M" + std::to_string(m) + "/heat_ratio_hi", hi);
        bool pass = worst_recon < 1e-10 && lo > 0.1 && hi < 10.0;
        all_pass = all_pass && pass;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << "besov M=" << m
                  << ": reconstruction " << worst_recon << ", heat ratio in [" << lo
                  << ", " << hi << "]\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        io::write_labeled_csv(fs::path(out_dir) / "besov_verify.csv", "check", "value", csv);
    }
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// lagrangian checks
// ---------------------------------------------------------------------------

int run_lagrangian(const std::string& in_dir, const std::string& which,
                   const std::string& out_dir) {
    auto traj = io::load_trajectory(in_dir);
    auto u = traj.series_u();
    auto fm = lagrangian::flow_map(u);
    fs::path out = out_dir.empty() ? fs::path(in_dir) : fs::path(out_dir);
    fs::create_directories(out);

    if (which == "identities") {
        auto lag = lagrangian::to_lagrangian(traj, fm);
        double aj = 0.0, det_drift = 0.0;
        for (std::size_t k = 0; k < fm.times.size(); ++k) {
            const auto& A = fm.jac_inverse.fields[k];
            const auto& J = fm.jacobian.fields[k];
            const Grid& g = A.grid();
            SpectralField prod(g, g.dim * g.dim);
            for (int i = 0; i < g.dim; ++i)
                for (int j = 0; j < g.dim; ++j) {
                    double* p = prod.component_data(i * g.dim + j);
                    kern::parallel_for(g.size(), [&](std::size_t q) {
                        double acc = 0.0;
                        for (int mm = 0; mm < g.dim; ++mm)
                            acc += A.at(i * g.dim + mm, q) * J.at(mm * g.dim + j, q);
                        p[q] = acc - (i == j ? 1.0 : 0.0);
                    });
                }
            aj = std::max(aj, linf_norm(prod));
            if (g.dim == 2) {
                SpectralField det(g, 1);
                double* p = det.component_data(0);
                kern::parallel_for(g.size(), [&](std::size_t q) {
                    p[q] = J.at(0, q) * J.at(3, q) - J.at(1, q) * J.at(2, q) - 1.0;
                });
                det_drift = std::max(det_drift, linf_norm(det));
            }
        }
        std::vector<std::pair<std::string, double>> rows = {
            {"grad_identity_discrepancy", lag.grad_u_discrepancy},
            {"h_identity_discrepancy", lag.h_discrepancy},
            {"A_jacobian_product_minus_id", aj},
            {"det_jacobian_drift", det_drift},
            {"lipschitz_budget", fm.lipschitz_budget.back()},
            {"neumann_used", fm.neumann_used ? 1.0 : 0.0},
        };
        io::write_labeled_csv(out / "lagrangian_identities.csv", "check", "value", rows);
        verdict_line(std::cout, lag.grad_u_discrepancy <= 1e-3,
                     "gradient identity discrepancy", lag.grad_u_discrepancy, "<= 1e-3");
        verdict_line(std::cout, aj <= (fm.neumann_used ? 1e-8 : 1e-10),
                     "A . D_yX - Id", aj, fm.neumann_used ? "<= 1e-8" : "<= 1e-10");
        verdict_line(std::cout, det_drift <= 1e-4, "det D_yX - 1", det_drift, "<= 1e-4");
        return g_exit;
    }

    if (which == "residuals") {
        auto lag = lagrangian::to_lagrangian(traj, fm);
        auto res = lagrangian::lagrangian_residuals(lag, fm, traj.constants());
        std::vector<std::pair<std::string, double>> rows = {
            {"density", res.density},
            {"momentum", res.momentum},
            {"director", res.director},
            {"divergence", res.divergence},
            {"h_equation", res.h_equation},
        };
        io::write_labeled_csv(out / "lagrangian_residuals.csv", "equation", "value", rows);
        for (auto& [k, v] : rows) std::cout << k << " residual: " << v << "\n";
        return 0;
    }

    if (which == "deltaA") {
        // compare against a slightly perturbed flow
        auto v2 = u;
        for (auto& f : v2.fields) f = scaled(f, 0.9);
        auto rep = lagrangian::delta_A_identity(u, v2);
        std::vector<std::pair<std::string, double>> rows = {
            {"max_discrepancy", rep.max_discrepancy},
            {"truncation_order", static_cast<double>(rep.truncation_order)},
            {"rho", rep.rho},
        };
        io::write_labeled_csv(out / "lagrangian_deltaA.csv", "check", "value", rows);
        verdict_line(std::cout, rep.max_discrepancy <= 1e-9, "deltaA identity discrepancy",
                     rep.max_discrepancy, "<= 1e-9");
        return g_exit;
    }

    std::cerr << "unknown --check '" << which << "' (identities|residuals|deltaA)\n";
    return 2;
}

// ---------------------------------------------------------------------------
// verify all
// ---------------------------------------------------------------------------

int run_verify_all(const std::string& in_dir, const std::string& out_dir) {
    auto traj = io::load_trajectory(in_dir);
    fs::path out = out_dir.empty() ? fs::path(in_dir) : fs::path(out_dir);
    fs::create_directories(out);
    std::ofstream verdict(out / "verdict.txt");
    auto emit = [&](bool pass, const std::string& what, double value,
                    const std::string& bound) {
        verdict_line(std::cout, pass, what, value, bound);
        verdict_line(verdict, pass, what, value, bound);
    };

    auto diag = diagnostics::energy_report(traj);
    {
        std::vector<std::vector<double>> rows;
        for (const auto& r : diag)
            rows.push_back({r.time, r.energy, r.dissipation, r.dedt, r.balance_residual,
                            r.div_norm, r.sphere_drift, r.a_max});
        io::write_csv(out / "diagnostics.csv",
                      {"time", "energy", "dissipation", "dedt", "balance_residual",
                       "div_norm", "sphere_drift", "a_max"},
                      rows);
    }
    double e_grow = 0.0, div_worst = 0.0, drift_worst = 0.0, amax_excess = 0.0;
    for (std::size_t k = 0; k + 1 < diag.size(); ++k)
        e_grow = std::max(e_grow, diag[k + 1].energy - diag[k].energy);
    for (const auto& r : diag) {
        div_worst = std::max(div_worst, r.div_norm);
        drift_worst = std::max(drift_worst, r.sphere_drift);
        amax_excess = std::max(amax_excess, r.a_max - diag[0].a_max);
    }
    emit(e_grow <= 1e-8, "energy monotonicity (max increase)", e_grow, "<= 1e-8");
    emit(div_worst <= 1e-8, "spectral divergence of u", div_worst, "<= 1e-8");
    emit(amax_excess <= 1e-12, "max principle excess ||a(t)||-||a0||", amax_excess,
         "<= 1e-12");
    verdict << "sphere drift sup | |d|-1 |: " << drift_worst << " (monitored)\n";

    auto tests = solver::make_test_functions(traj.grid(), traj.horizon(), 2, 4242);
    auto residuals = solver::weak_form_residual(traj, tests);
    io::write_labeled_csv(out / "weak_residuals.csv", "identity", "value", residuals);
    double worst_w = 0.0;
    for (auto& [k, v] : residuals) worst_w = std::max(worst_w, v);
    emit(worst_w <= 1e-4, "weak-form residual (worst)", worst_w, "<= 1e-4");

    run_lagrangian(in_dir, "identities", out.string());
    return g_exit;
}

// ---------------------------------------------------------------------------
// besov report
// ---------------------------------------------------------------------------

int run_besov_report(const std::string& snapshot, const std::string& index,
                     bool with_heat, const std::string& out_file) {
    auto loaded = io::read_elf1(snapshot);
    double s, p, r;
    {
        std::istringstream is(index);
        char c1, c2;
        if (!(is >> s >> c1 >> p >> c2 >> r) || c1 != ',' || c2 != ',')
            throw std::runtime_error("--index must be 's,p,r'");
    }
    besov::BesovIndex idx(s, p, r);
    SpectralField f = remove_mean(loaded.field);

    std::vector<std::pair<std::string, double>> rows;
    auto dec = besov::dyadic_blocks(f);
    for (auto& [q, blk] : dec.blocks) {
        double lp = lp_norm(blk, p);
        rows.emplace_back("block_lp/q=" + std::to_string(q), lp);
        rows.emplace_back("weighted/q=" + std::to_string(q), std::exp2(s * q) * lp);
    }
    double norm = besov::besov_norm(f, idx);
    rows.emplace_back("besov_norm", norm);
    if (with_heat && s < 0.0) {
        double hc = besov::heat_characterization_norm(
            f, idx, besov::default_heat_time_grid(f.grid()));
        rows.emplace_back("heat_characterization", hc);
        rows.emplace_back("ratio", norm == 0.0 ? 0.0 : hc / norm);
    }
    fs::path out = out_file.empty() ? fs::path(snapshot).replace_extension(".besov.csv")
                                    : fs::path(out_file);
    io::write_labeled_csv(out, "quantity", "value", rows);
    std::cout << "besov norm (" << s << "," << p << "," << r << ") = " << norm << " -> "
              << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    kern::init_threads();
    CLI::App app{"periodic-torus laboratory for the coupled flow/director system"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir, lemma = "2.2", check = "identities";
    std::string snapshot, index = "-1,2,2", out_file;
    int trials = 20;
    bool with_heat = false;

    auto* sim = app.add_subcommand("simulate", "run a configured scenario");
    sim->add_option("--config", config_path, "configuration file")->required();
    sim->add_option("--out", out_dir, "override the output directory");

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->require_subcommand(1);
    auto* vd = verify->add_subcommand("duhamel", "operator boundedness ratios");
    vd->add_option("--lemma", lemma,
                   "check id: 2.2|2.3|2.4|2.5|2.6|2.7|A.1|A.2|A.3|A.4");
    vd->add_option("--trials", trials, "family size");
    vd->add_option("--out", out_dir, "CSV output directory");
    auto* vb = verify->add_subcommand("besov", "decomposition and heat equivalence");
    vb->add_option("--trials", trials, "family size");
    vb->add_option("--out", out_dir, "CSV output directory");
    auto* vl = verify->add_subcommand("lagrangian", "flow-map identities");
    vl->add_option("--in", in_dir, "trajectory directory")->required();
    vl->add_option("--out", out_dir, "CSV output directory");
    auto* va = verify->add_subcommand("all", "every suite on a stored trajectory");
    va->add_option("--in", in_dir, "trajectory directory")->required();
    va->add_option("--out", out_dir, "output directory (defaults to --in)");

    auto* besov_cmd = app.add_subcommand("besov", "dyadic-block reports");
    auto* report = besov_cmd->add_subcommand("report", "per-block norm report");
    report->add_option("snapshot", snapshot, "ELF1 field file")->required();
    report->add_option("--index", index, "Besov index s,p,r");
    report->add_flag("--heat", with_heat, "add the heat-characterization value");
    report->add_option("--out", out_file, "CSV output path");

    auto* lag = app.add_subcommand("lagrangian", "flow-map checks on a trajectory");
    lag->add_option("--in", in_dir, "trajectory directory")->required();
    lag->add_option("--check", check, "identities|residuals|deltaA");
    lag->add_option("--out", out_dir, "CSV output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return run_simulate(config_path, out_dir);
        if (*vd) return run_verify_duhamel(lemma, trials, out_dir);
        if (*vb) return run_verify_besov(trials, out_dir);
        if (*vl) return run_lagrangian(in_dir, "identities", out_dir);
        if (*va) return run_verify_all(in_dir, out_dir);
        if (*report) return run_besov_report(snapshot, index, with_heat, out_file);
        if (*lag) return run_lagrangian(in_dir, check, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
