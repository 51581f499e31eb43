// Command-line front end: analyze a system's spectral profile, reproduce the
// minimum-processor and complexity tables, run the solvers and the
// asynchronous simulator, and sweep the U(theta, omega) surface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssgd/async_sim.hpp"
#include "ssgd/io.hpp"
#include "ssgd/rate_theory.hpp"
#include "ssgd/sketch.hpp"
#include "ssgd/solvers.hpp"

namespace {

using namespace ssgd;

struct SystemFlags {
    std::string a_path;
    std::string b_path;
    std::string geometry = "identity";  // path or "identity"
    std::string dist_path;
    std::size_t mc_samples = 0;
};

void add_system_flags(CLI::App* cmd, SystemFlags& flags, bool required) {
    auto* a = cmd->add_option("--A", flags.a_path, "matrix A as CSV (one row per line)");
    auto* b = cmd->add_option("--b", flags.b_path, "right-hand side b as single-column CSV");
    cmd->add_option("--B", flags.geometry, "SPD geometry matrix CSV, or 'identity'");
    cmd->add_option("--dist", flags.dist_path,
                    "sketch distribution JSON (default: uniform coordinate)");
    cmd->add_option("--mc-samples", flags.mc_samples,
                    "Monte Carlo samples for gaussian E[Z] (default 10000)");
    if (required) {
        a->required();
        b->required();
    }
}

LinearSystem load_system(const SystemFlags& flags) {
    DenseMatrix a = read_matrix_csv(flags.a_path);
    Vector b = read_vector_csv(flags.b_path);
    SpdMatrix geom = flags.geometry == "identity"
                         ? SpdMatrix::identity(a.cols())
                         : SpdMatrix(read_matrix_csv(flags.geometry));
    return LinearSystem(std::move(a), std::move(b), std::move(geom));
}

SketchDistribution load_distribution(const SystemFlags& flags, const LinearSystem& sys) {
    if (flags.dist_path.empty()) return SketchDistribution::coordinate_uniform(sys.rows());
    return read_distribution_file(flags.dist_path, sys.rows(), &sys);
}

SpectralProfile profile_from_flags(const SystemFlags& flags, double lambda_min, double lambda_max,
                                   std::uint64_t seed) {
    if (lambda_min > 0.0) return profile_from_extremes(lambda_min, lambda_max);
    if (flags.a_path.empty())
        throw validation_error("give either --lambda-min/--lambda-max or --A/--b inputs");
    const LinearSystem sys = load_system(flags);
    const SketchDistribution dist = load_distribution(flags, sys);
    std::size_t mc = flags.mc_samples;
    if (!dist.is_discrete() && mc == 0) mc = 10000;
    return spectral_profile(sys, dist, 1e-9, mc, seed);
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw validation_error("cannot write file: " + out_path);
    out << text;
}

std::string min_tau_csv(const SpectralProfile& p, double c, std::size_t tau_max) {
    const auto tau = min_processors(p, c, tau_max);
    std::string row = "lambda_min_plus,lambda_max,c,k,kappa,tau\n";
    row += format_g6(p.lambda_min_plus) + "," + format_g6(p.lambda_max) + "," + format_g6(c) +
           "," + format_g6(p.k) + "," + format_g6(p.kappa) + ",";
    row += tau ? std::to_string(*tau) : std::string("none");
    row += "\n";
    return row;
}

std::string rates_report(const SpectralProfile& p, std::size_t tau, double c,
                         const std::string& format) {
    const double delay = c * static_cast<double>(tau);  // delta_a, fractional c allowed
    const double t1 = theta_opt_at_omega1(delay, p);
    const double c1 = complexity_at_theta1(delay, p);
    const bool case2 = p.case_tag == CaseTag::Case2;
    const double t_alt = case2 ? theta_opt_at_omega2(delay) : theta_opt_at_omegastar(delay, p);
    const double w_alt = case2 ? 2.0 : p.omega_star;
    const double c_alt =
        case2 ? complexity_at_theta2(delay, p) : complexity_at_thetastar(delay, p);
    const ComplexityBound sync = chi_s_opt(tau, p);
    const AsymptoticComparison lim = asymptotic_limits(p);

    if (format == "json") {
        nlohmann::json j;
        j["case"] = to_string(p.case_tag);
        j["tau"] = tau;
        j["c"] = c;
        j["delta_a"] = delay;
        j["async"] = {{{"omega", 1.0}, {"theta", t1}, {"complexity", c1}},
                      {{"omega", w_alt}, {"theta", t_alt}, {"complexity", c_alt}}};
        j["sync"] = {{"omega", sync.stepsize}, {"complexity", sync.value}};
        j["asymptotic"] = {{"sync", lim.sync_limit},
                           {"async", lim.async_limit},
                           {"async_better", lim.async_better}};
        return j.dump(2) + "\n";
    }

    std::string csv = "algorithm,omega,theta,tau,delta_a,complexity\n";
    csv += "async," + format_g6(1.0) + "," + format_g6(t1) + "," + std::to_string(tau) + "," +
           format_g6(delay) + "," + format_g6(c1) + "\n";
    csv += "async," + format_g6(w_alt) + "," + format_g6(t_alt) + "," + std::to_string(tau) +
           "," + format_g6(delay) + "," + format_g6(c_alt) + "\n";
    csv += "sync," + format_g6(sync.stepsize) + ",," + std::to_string(tau) + ",," +
           format_g6(sync.value) + "\n";
    csv += "async," + (case2 ? format_g6(2.0) : format_g6(p.omega_star)) + ",,inf,inf," +
           format_g6(lim.async_limit) + "\n";
    csv += "sync,,,inf,inf," + format_g6(lim.sync_limit) + "\n";
    csv += std::string("verdict,") +
           (lim.async_better ? "async better asymptotically" : "sync better asymptotically") +
           ",,,,\n";
    return csv;
}

int run(int argc, char** argv) {
    CLI::App app{"stochastic solvers and convergence-rate theory for consistent linear systems"};
    app.require_subcommand(1);

    // analyze -----------------------------------------------------------
    SystemFlags an_flags;
    std::string an_out;
    std::uint64_t an_seed = 0;
    auto* analyze = app.add_subcommand("analyze", "spectral profile of W = B^-1/2 E[Z] B^-1/2");
    add_system_flags(analyze, an_flags, true);
    analyze->add_option("--seed", an_seed, "seed for Monte Carlo E[Z]");
    analyze->add_option("--out", an_out, "output JSON path (default stdout)");

    // min-tau -----------------------------------------------------------
    SystemFlags mt_flags;
    double mt_lmin = 0.0, mt_lmax = 0.0, mt_c = 1.0;
    std::size_t mt_tau_max = 1000000;
    std::string mt_out;
    auto* min_tau = app.add_subcommand(
        "min-tau", "minimum processor count for the asynchronous method to win");
    add_system_flags(min_tau, mt_flags, false);
    min_tau->add_option("--lambda-min", mt_lmin, "lambda_min^+ of W (direct entry)");
    min_tau->add_option("--lambda-max", mt_lmax, "lambda_max of W (direct entry)");
    min_tau->add_option("--c", mt_c, "delay ratio, delta_a = round(c tau)")->required();
    min_tau->add_option("--tau-max", mt_tau_max, "search ceiling");
    min_tau->add_option("--out", mt_out, "output CSV path (default stdout)");

    // rates -------------------------------------------------------------
    SystemFlags rt_flags;
    double rt_lmin = 0.0, rt_lmax = 0.0, rt_c = 1.0;
    std::size_t rt_tau = 0;
    std::string rt_out, rt_format = "csv";
    auto* rates = app.add_subcommand("rates", "complexity table for tuned parameter pairs");
    add_system_flags(rates, rt_flags, false);
    rates->add_option("--lambda-min", rt_lmin, "lambda_min^+ of W (direct entry)");
    rates->add_option("--lambda-max", rt_lmax, "lambda_max of W (direct entry)");
    rates->add_option("--tau", rt_tau, "processor count")->required();
    rates->add_option("--c", rt_c, "delay ratio");
    rates->add_option("--format", rt_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    rates->add_option("--out", rt_out, "output path (default stdout)");

    // solve --------------------------------------------------------------
    SystemFlags sv_flags;
    std::string sv_method = "basic", sv_out;
    double sv_omega = 1.0;
    std::size_t sv_tau = 1, sv_steps = 100;
    std::uint64_t sv_seed = 0;
    auto* solve = app.add_subcommand("solve", "run the basic or synchronous parallel method");
    add_system_flags(solve, sv_flags, true);
    solve->add_option("--method", sv_method, "basic or parallel")
        ->check(CLI::IsMember({"basic", "parallel"}));
    solve->add_option("--omega", sv_omega, "stepsize");
    solve->add_option("--tau", sv_tau, "processors (parallel method)");
    solve->add_option("--steps", sv_steps, "iterations");
    solve->add_option("--seed", sv_seed, "random seed");
    solve->add_option("--out", sv_out, "trace CSV path")->required();

    // simulate ------------------------------------------------------------
    SystemFlags sm_flags;
    std::string sm_out, sm_events, sm_schedule = "roundrobin";
    double sm_c = 1.0, sm_theta = 0.5, sm_omega = 1.0;
    std::size_t sm_tau = 2, sm_intervals = 10, sm_trials = 100;
    std::uint64_t sm_seed = 0;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "discrete-event asynchronous master-worker simulation");
    add_system_flags(simulate_cmd, sm_flags, true);
    simulate_cmd->add_option("--tau", sm_tau, "worker count (>= 2)");
    simulate_cmd->add_option("--c", sm_c, "delay ratio, delta_a = round(c tau)");
    simulate_cmd->add_option("--theta", sm_theta, "damping factor in [0,1]");
    simulate_cmd->add_option("--omega", sm_omega, "stepsize");
    simulate_cmd->add_option("--intervals", sm_intervals, "unit intervals to simulate");
    simulate_cmd->add_option("--trials", sm_trials, "independent trials to average");
    simulate_cmd->add_option("--seed", sm_seed, "random seed");
    simulate_cmd->add_option("--schedule", sm_schedule, "roundrobin or random")
        ->check(CLI::IsMember({"roundrobin", "random"}));
    simulate_cmd->add_option("--out", sm_out, "report CSV path")->required();
    simulate_cmd->add_option("--events-csv", sm_events, "optional event-level CSV path");

    // sweep ---------------------------------------------------------------
    SystemFlags sw_flags;
    double sw_lmin = 0.0, sw_lmax = 0.0, sw_c = 1.0, sw_omega_max = 0.0;
    std::size_t sw_tau = 0, sw_delay = 0;
    std::string sw_grid = "100x100", sw_out;
    auto* sweep = app.add_subcommand("sweep", "grid the U(theta, omega) complexity surface");
    add_system_flags(sweep, sw_flags, false);
    sweep->add_option("--lambda-min", sw_lmin, "lambda_min^+ of W (direct entry)");
    sweep->add_option("--lambda-max", sw_lmax, "lambda_max of W (direct entry)");
    sweep->add_option("--tau", sw_tau, "processor count (with --c)");
    sweep->add_option("--c", sw_c, "delay ratio");
    sweep->add_option("--delta-a", sw_delay, "maximum delay (overrides --tau/--c)");
    sweep->add_option("--grid", sw_grid, "theta x omega resolution, e.g. 200x200");
    sweep->add_option("--omega-max", sw_omega_max, "grid upper edge (default omega* + 0.5)");
    sweep->add_option("--out", sw_out, "surface CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    if (analyze->parsed()) {
        const LinearSystem sys = load_system(an_flags);
        const SketchDistribution dist = load_distribution(an_flags, sys);
        std::size_t mc = an_flags.mc_samples;
        if (!dist.is_discrete() && mc == 0) mc = 10000;
        const SpectralProfile p = spectral_profile(sys, dist, 1e-9, mc, an_seed);
        emit(an_out, profile_to_json(p).dump(2) + "\n");
        return 0;
    }

    if (min_tau->parsed()) {
        const SpectralProfile p = profile_from_flags(mt_flags, mt_lmin, mt_lmax, 0);
        emit(mt_out, min_tau_csv(p, mt_c, mt_tau_max));
        return 0;
    }

    if (rates->parsed()) {
        const SpectralProfile p = profile_from_flags(rt_flags, rt_lmin, rt_lmax, 0);
        emit(rt_out, rates_report(p, rt_tau, rt_c, rt_format));
        return 0;
    }

    if (solve->parsed()) {
        const LinearSystem sys = load_system(sv_flags);
        const SketchDistribution dist = load_distribution(sv_flags, sys);
        const std::size_t tau = sv_method == "basic" ? 1 : sv_tau;
        const RunTrace trace = run_parallel(sys, dist, sv_omega, tau, sv_steps, sv_seed);
        write_trace_csv(sv_out, trace);
        write_json(sv_out + ".meta.json", trace_metadata(trace));
        std::cout << "final error_bsq " << format_g6(trace.records.back().error_bsq) << " after "
                  << trace.records.back().step << " steps\n";
        return 0;
    }

    if (simulate_cmd->parsed()) {
        const LinearSystem sys = load_system(sm_flags);
        const SketchDistribution dist = load_distribution(sm_flags, sys);
        SimulationOptions opts;
        opts.kind = sm_schedule == "random" ? ScheduleKind::SeededRandomWeighted
                                            : ScheduleKind::RoundRobinWeighted;
        const ConvergenceReport report = simulate(sys, dist, sm_tau, sm_c, sm_theta, sm_omega,
                                                  sm_intervals, sm_trials, sm_seed, opts);
        write_report_csv(sm_out, report);
        write_json(sm_out + ".meta.json", report_metadata(report));
        if (!sm_events.empty()) write_events_csv(sm_events, report);

        const SpectralProfile p = spectral_profile(sys, dist);
        const BoundComparison cmp = compare_to_bound(report, p);
        std::cout << "empirical unit rate " << format_g6(cmp.empirical_rate);
        if (cmp.feasible)
            std::cout << " vs bound " << format_g6(cmp.bound);
        std::cout << " (" << to_string(cmp.verdict) << ")\n";
        return 0;
    }

    if (sweep->parsed()) {
        const SpectralProfile p = profile_from_flags(sw_flags, sw_lmin, sw_lmax, 0);
        std::size_t delay = sw_delay;
        if (delay == 0) {
            if (sw_tau == 0)
                throw validation_error("sweep: give --delta-a or --tau (with --c)");
            delay = static_cast<std::size_t>(std::llround(sw_c * static_cast<double>(sw_tau)));
        }
        std::size_t n_theta = 0, n_omega = 0;
        if (std::sscanf(sw_grid.c_str(), "%zux%zu", &n_theta, &n_omega) != 2 || n_theta < 2 ||
            n_omega < 2)
            throw validation_error("sweep: --grid must look like 200x200");
        const double omega_hi = sw_omega_max > 0.0 ? sw_omega_max : p.omega_star + 0.5;

        std::vector<double> thetas(n_theta), omegas(n_omega);
        for (std::size_t i = 0; i < n_theta; ++i)
            thetas[i] = static_cast<double>(i + 1) / static_cast<double>(n_theta);
        for (std::size_t i = 0; i < n_omega; ++i)
            omegas[i] = omega_hi * static_cast<double>(i + 1) / static_cast<double>(n_omega);

        const GridSearchResult result = grid_search_u(delay, p, thetas, omegas);
        std::ofstream out(sw_out);
        if (!out) throw validation_error("cannot write file: " + sw_out);
        out << "theta,omega,U\n";
        for (const auto& cell : result.surface) {
            out << format_g6(cell.damping) << ',' << format_g6(cell.stepsize) << ',';
            if (std::isfinite(cell.u)) out << format_g6(cell.u);
            else out << "inf";
            out << '\n';
        }
        std::cout << "argmin U=" << format_g6(result.u) << " at theta="
                  << format_g6(result.damping) << " omega=" << format_g6(result.stepsize)
                  << "\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ssgd::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ssgd::infeasible_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
