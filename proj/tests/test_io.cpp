/// @file test_io.cpp
/// @brief Snapshot format round trips, trajectory persistence, the config
/// parser's error reporting, scenario generator preconditions, and
/// determinism of repeated generation.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "nematic/config.hpp"
#include "nematic/io.hpp"
#include "nematic/scenarios.hpp"

using namespace nematic;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nematic_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("field file round trip preserves header and values exactly") {
    TempDir tmp;
    Grid g(2, 16);
    auto f = SpectralField::from_function(g, 3, [](int c, const auto& x) {
        return std::sin(x[0] + c) * std::cos(2.0 * x[1]) + c;
    });
    auto p = tmp.path / "f.elf";
    io::write_elf1(p, f, 0.375);
    auto loaded = io::read_elf1(p);
    CHECK(loaded.time == 0.375);
    CHECK(loaded.field.grid() == g);
    CHECK(loaded.field.components() == 3);
    CHECK(max_abs_diff(loaded.field, f) == 0.0);

    // 24 bytes of header before the component count: magic + dims + reals
    std::ifstream is(p, std::ios::binary);
    char head[8];
    is.read(head, 8);
    CHECK(std::string(head, 8) == "ELFIELD1");
}

TEST_CASE("corrupt field files are rejected with a reason") {
    TempDir tmp;
    auto p = tmp.path / "bad.elf";
    {
        std::ofstream os(p, std::ios::binary);
        os << "NOTAFILE";
    }
    CHECK_THROWS_WITH_AS(io::read_elf1(p), doctest::Contains("magic"), std::runtime_error);
    CHECK_THROWS_AS(io::read_elf1(tmp.path / "missing.elf"), std::runtime_error);
}

TEST_CASE("trajectory save/load round trip with stride") {
    TempDir tmp;
    Grid g(2, 16);
    PhysicalConstants pc;
    pc.nu = 1.5;
    solver::Trajectory traj;
    for (int k = 0; k <= 10; ++k) {
        solver::StateSnapshot s;
        s.time = 0.1 * k;
        s.a = SpectralField::from_function(g, 1, [&](int, const auto& x) {
            return 0.01 * k * std::cos(x[0]);
        });
        s.u = SpectralField(g, 2);
        s.d = SpectralField::from_function(g, 2, [](int c, const auto&) {
            return c == 0 ? 1.0 : 0.0;
        });
        s.grad_pi = SpectralField(g, 2);
        s.constants = pc;
        traj.snapshots.push_back(std::move(s));
    }
    io::save_trajectory(tmp.path, traj, 4);
    auto loaded = io::load_trajectory(tmp.path);
    // indices 0, 4, 8 and the forced final level 10
    CHECK(loaded.steps() == 4);
    CHECK(loaded.snapshots.back().time == doctest::Approx(1.0));
    CHECK(loaded.constants().nu == doctest::Approx(1.5));
    CHECK(max_abs_diff(loaded.snapshots[1].a, traj.snapshots[4].a) == 0.0);
}

TEST_CASE("config parser: values, fallbacks, and line-accurate errors") {
    auto cfg = config::Config::parse_string(
        "[grid]\n"
        "dim = 2\n"
        "M = 64\n"
        "# comment\n"
        "[scheme]\n"
        "r = 1.5\n"
        "smallness = warn\n"
        "flag = true\n",
        "test.toml");
    CHECK(cfg.get_int("grid", "dim") == 2);
    CHECK(cfg.get_double("scheme", "r") == 1.5);
    CHECK(cfg.get_string("scheme", "smallness") == "warn");
    CHECK(cfg.get_bool("scheme", "flag", false));
    CHECK(cfg.get_double("scheme", "missing", 7.0) == 7.0);

    CHECK_THROWS_WITH_AS(cfg.get_double("scheme", "smallness"), doctest::Contains("smallness"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(cfg.get_string("nope", "key"), doctest::Contains("nope"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(config::Config::parse_string("key = 1\n", "x"),
                         doctest::Contains("outside any"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config::Config::parse_string("[a]\nnonsense\n", "x"),
                         doctest::Contains("key = value"), std::runtime_error);

    // round trip through the resolved form
    auto again = config::Config::parse_string(cfg.to_string());
    CHECK(again.get_double("scheme", "r") == 1.5);
}

TEST_CASE("scenario generators satisfy the solver preconditions") {
    Grid g(2, 32);
    PhysicalConstants pc;
    for (const auto& name : scenarios::scenario_names()) {
        auto sc = scenarios::make_scenario(name, g, pc);
        INFO(name);
        CHECK(spectral_divergence_norm(sc.u0) < 1e-10);
        CHECK(is_mean_zero(sc.u0, 1e-10));
        SpectralField m = magnitude(sc.d0);
        const double* mp = m.component_ptr(0);
        double drift = kern::max(g.size(), [&](std::size_t i) { return std::abs(mp[i] - 1.0); });
        CHECK(drift < 1e-8);
        CHECK(linf_norm(sc.a0) < 0.9);
    }
    CHECK_THROWS_AS(scenarios::make_scenario("bogus", g, pc), std::invalid_argument);
}

TEST_CASE("scenarios under the smallness gate actually pass it") {
    Grid g(2, 32);
    PhysicalConstants pc;
    // zero, mixture and random_small ship with the gate enforced
    for (const char* name : {"zero", "mixture_step_density", "random_small"}) {
        auto sc = scenarios::make_scenario(name, g, pc);
        REQUIRE(sc.defaults.enforce_smallness);
        double eta = besov::smallness_eta(sc.a0, sc.u0, sc.d0, sc.defaults.p, sc.defaults.r);
        INFO(name);
        CHECK(eta <= sc.defaults.c0);
    }
    // the order-one equilibrium and vortex scenarios override to warn-only
    for (const char* name : {"stationary_director", "taylor_green"}) {
        auto sc = scenarios::make_scenario(name, g, pc);
        CHECK(!sc.defaults.enforce_smallness);
    }
}

TEST_CASE("repeated runs produce bit-identical snapshot files") {
    TempDir tmp;
    Grid g(2, 16);
    PhysicalConstants pc;
    auto run_once = [&](const fs::path& dir) {
        auto sc = scenarios::make_scenario("random_small", g, pc, {{"eta_target", "0.01"}});
        sc.defaults.T = 0.125;
        sc.defaults.dt = sc.defaults.T / 8;
        auto res = solver::picard_solve(sc.a0, sc.u0, sc.d0, sc.defaults);
        io::save_trajectory(dir, res.trajectory, 2);
    };
    run_once(tmp.path / "r1");
    run_once(tmp.path / "r2");
    for (auto& entry : fs::directory_iterator(tmp.path / "r1")) {
        auto other = tmp.path / "r2" / entry.path().filename();
        std::ifstream f1(entry.path(), std::ios::binary), f2(other, std::ios::binary);
        std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        INFO(entry.path().filename().string());
        CHECK(b1 == b2);
    }
}

TEST_CASE("random_small hits its smallness target and is deterministic") {
    Grid g(2, 32);
    PhysicalConstants pc;
    for (const char* target : {"0.005", "0.01", "0.02"}) {
        auto sc = scenarios::make_scenario("random_small", g, pc, {{"eta_target", target}});
        double eta = besov::smallness_eta(sc.a0, sc.u0, sc.d0, sc.defaults.p, sc.defaults.r);
        double want = std::stod(target);
        CHECK(std::abs(eta - want) / want < 0.1);
        CHECK(eta <= sc.defaults.c0);
    }
    auto s1 = scenarios::make_scenario("random_small", g, pc, {{"seed", "7"}});
    auto s2 = scenarios::make_scenario("random_small", g, pc, {{"seed", "7"}});
    CHECK(max_abs_diff(s1.u0, s2.u0) == 0.0);
    CHECK(max_abs_diff(s1.d0, s2.d0) == 0.0);
}
