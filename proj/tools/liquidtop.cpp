// liquidtop: spectral stability laboratory for a liquid-filled spinning top.
//
// Subcommands bind a JSON config to one experiment and write machine-readable
// reports into a run directory.  Exit codes: 0 success, 2 config error,
// 3 solver error, 4 assertion failure (an experiment report did not pass).

#include "liquidtop/config.hpp"
#include "liquidtop/dynamics.hpp"
#include "liquidtop/errors.hpp"
#include "liquidtop/experiments.hpp"
#include "liquidtop/model.hpp"
#include "liquidtop/operators.hpp"
#include "liquidtop/parallel.hpp"
#include "liquidtop/rng.hpp"
#include "liquidtop/spectral.hpp"

#include <CLI11.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace liquidtop;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", args.out_dir, "output directory (default ./runs/<timestamp>)");
    cmd->add_option("--threads", args.threads, "worker threads (default: all cores)");
    std::uint64_t* seed_slot = nullptr;
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](const std::uint64_t& s) { args.seed = s; },
        "override the config seed");
    (void)seed_slot;
}

fs::path prepare_out_dir(const CommonArgs& args) {
    fs::path dir;
    if (!args.out_dir.empty()) {
        dir = args.out_dir;
    } else {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        dir = fs::path("runs") / std::to_string(ms);
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << content << "\n";
}

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
        if (cfg.stability) cfg.stability->seed = *args.seed;
    }
    set_thread_count(resolve_thread_count(args.threads));
    return cfg;
}

SolenoidalBasis obtain_basis(const RunConfig& cfg) {
    const Rational h = rational_of(cfg.params.cavity_scale);
    if (cfg.table_file && fs::exists(*cfg.table_file)) {
        SolenoidalBasis b = load_basis(*cfg.table_file);
        if (b.degree == cfg.degree && b.h == h) return b;
        std::cerr << "note: table_file does not match config, rebuilding\n";
    }
    SolenoidalBasis b = build_cube_basis(h, cfg.degree);
    if (cfg.table_file) save_basis(b, *cfg.table_file);
    return b;
}

int run_spectrum(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    fs::path dir = prepare_out_dir(args);
    SolenoidalBasis basis = obtain_basis(cfg);
    ReducedSystem sys = assemble(basis, cfg.params);
    SpectrumReport rep = spectrum(generator(sys));
    write_file(dir / "spectrum.json", spectrum_report_json(rep));
    std::cout << "spectrum: N=" << basis.size() << " kernel_dim=" << rep.kernel_dim
              << " min_re_sigma1=" << rep.min_re_sigma1 << "\n"
              << "report: " << (dir / "spectrum.json").string() << "\n";
    return 0;
}

int run_threshold(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    if (!cfg.threshold_lambda2_min || !cfg.threshold_lambda2_max) {
        throw ConfigError("threshold requires a 'threshold' config section");
    }
    if (!cfg.params.threshold_lambda2()) {
        throw ConfigError("no threshold exists: C <= max{A,B}");
    }
    fs::path dir = prepare_out_dir(args);
    SolenoidalBasis basis = obtain_basis(cfg);
    ThresholdResult res =
        threshold_bisection(basis, cfg.params, *cfg.threshold_lambda2_min,
                            *cfg.threshold_lambda2_max, cfg.threshold_rel_bracket);
    write_file(dir / "threshold.json", threshold_result_json(res));
    std::cout << "threshold: numeric=" << res.lambda2_star_numeric
              << " analytic=" << res.lambda2_star_analytic
              << " rel_error=" << res.relative_error << "\n"
              << "report: " << (dir / "threshold.json").string() << "\n";
    return 0;
}

int run_stability(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    StabilityRunSettings settings = cfg.stability.value_or(StabilityRunSettings{});
    if (!cfg.stability) {
        settings.alpha = cfg.alpha;
        settings.horizon = cfg.horizon;
        settings.rtol = cfg.rtol;
        settings.atol = cfg.atol;
        settings.samples = cfg.samples;
        settings.seed = cfg.seed;
    }
    fs::path dir = prepare_out_dir(args);
    SolenoidalBasis basis = obtain_basis(cfg);
    StabilityReport rep = stability_run(basis, cfg.params, settings);
    write_file(dir / "stability.json", stability_report_json(rep));
    std::cout << "stability: gamma_gap=" << rep.gamma_gap
              << " passed=" << (rep.passed ? "yes" : "no") << "\n"
              << "report: " << (dir / "stability.json").string() << "\n";
    return rep.passed ? 0 : 4;
}

int run_instability(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    InstabilityRunSettings settings = cfg.instability.value_or(InstabilityRunSettings{});
    if (!cfg.instability) {
        settings.alpha = cfg.alpha;
        settings.horizon = cfg.horizon;
        settings.rtol = cfg.rtol;
        settings.atol = cfg.atol;
        settings.samples = cfg.samples;
    }
    fs::path dir = prepare_out_dir(args);
    SolenoidalBasis basis = obtain_basis(cfg);
    InstabilityReport rep = instability_run(basis, cfg.params, settings);
    write_file(dir / "instability.json", instability_report_json(rep));
    std::cout << "instability: a0=" << rep.a0 << " passed=" << (rep.passed ? "yes" : "no") << "\n"
              << "report: " << (dir / "instability.json").string() << "\n";
    return rep.passed ? 0 : 4;
}

int run_converge(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    if (!cfg.converge_degrees) throw ConfigError("converge requires a 'converge' config section");
    fs::path dir = prepare_out_dir(args);
    ConvergenceStudy study =
        convergence_study(cfg.params, *cfg.converge_degrees, cfg.threshold_rel_bracket);
    write_file(dir / "converge.json", convergence_study_json(study));
    std::cout << "converge: degrees=" << study.rows.size()
              << " passed=" << (study.passed ? "yes" : "no") << "\n"
              << "report: " << (dir / "converge.json").string() << "\n";
    return study.passed ? 0 : 4;
}

int run_simulate(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    SimulateSettings sim = cfg.simulate.value_or(SimulateSettings{});
    if (!cfg.simulate) sim.horizon = cfg.horizon;
    fs::path dir = prepare_out_dir(args);
    SolenoidalBasis basis = obtain_basis(cfg);
    ReducedSystem sys = assemble(basis, cfg.params);
    Eigen::MatrixXd L = generator(sys);
    SpectrumReport rep = spectrum(L);
    Projections proj = projections(rep, L);
    FractionalNorm norm(sys, cfg.alpha);

    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(sys.n_total);
    if (sim.u0_kind == "kernel") {
        u0 = sim.magnitude * (sys.kernel_vector_omega() + sys.kernel_vector_z());
        u0.segment<3>(sys.n_v + 3) =
            admissible_z(Eigen::Vector3d(0, 0, 1), std::min(2.0, sim.magnitude));
    } else if (sim.u0_kind == "random") {
        std::mt19937_64 rng(cfg.seed);
        u0 = random_admissible_state(sys, norm, sim.magnitude, sim.z_fraction, rng);
    } else if (sim.u0_kind == "eigenvector") {
        Eigen::EigenSolver<Eigen::MatrixXd> es(L, true);
        int i0 = 0;
        for (int i = 1; i < es.eigenvalues().size(); ++i) {
            if (es.eigenvalues()[i].real() < es.eigenvalues()[i0].real()) i0 = i;
        }
        Eigen::VectorXd dir0 = es.eigenvectors().col(i0).real();
        u0 = sim.magnitude * dir0 / norm(dir0);
        u0.segment<3>(sys.n_v + 3) =
            project_to_constraint(Eigen::Vector3d(u0.segment<3>(sys.n_v + 3)));
    }

    IntegrateControls ctl;
    ctl.rtol = cfg.rtol;
    ctl.atol = cfg.atol;
    ctl.samples = cfg.samples;
    ctl.alpha = cfg.alpha;
    ctl.linear_only = sim.linear_only;
    ctl.projections = &proj;
    Trajectory traj = integrate(sys, PerturbationState::from_flat(u0), sim.horizon, ctl);
    write_trajectory_csv(traj, (dir / "trajectory.csv").string());

    std::cout << "simulate: steps=" << traj.accepted_steps << "+" << traj.rejected_steps << " status="
              << (traj.status == TrajectoryStatus::Completed ? "completed" : "escaped") << "\n"
              << "trajectory: " << (dir / "trajectory.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"liquid-filled spinning top stability laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* c_spectrum = app.add_subcommand("spectrum", "eigenvalues and kernel of the generator");
    auto* c_simulate = app.add_subcommand("simulate", "integrate one trajectory");
    auto* c_threshold = app.add_subcommand("threshold", "bisect the stability threshold");
    auto* c_stability = app.add_subcommand("stability", "nonlinear stability run");
    auto* c_instability = app.add_subcommand("instability", "eigenvector-seeded instability run");
    auto* c_converge = app.add_subcommand("converge", "discretization convergence study");
    for (auto* c : {c_spectrum, c_simulate, c_threshold, c_stability, c_instability, c_converge}) {
        add_common(c, args);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (c_spectrum->parsed()) return run_spectrum(args);
        if (c_simulate->parsed()) return run_simulate(args);
        if (c_threshold->parsed()) return run_threshold(args);
        if (c_stability->parsed()) return run_stability(args);
        if (c_instability->parsed()) return run_instability(args);
        if (c_converge->parsed()) return run_converge(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
