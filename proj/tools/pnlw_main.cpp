#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnlw/csv.hpp"
#include "pnlw/harness.hpp"
#include "pnlw/linear_flow.hpp"
#include "pnlw/nlw_solver.hpp"
#include "pnlw/penrose.hpp"
#include "pnlw/random_data.hpp"

using json = nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
}

void print_result(const pnlw::ExperimentResult& res) {
    for (const auto& c : res.checks)
        std::printf("%s %s: value=%.6g threshold=%.6g%s%s\n", c.pass ? "PASS" : "FAIL",
                    c.id.c_str(), c.value, c.threshold, c.detail.empty() ? "" : "  ",
                    c.detail.c_str());
    std::printf("%s %s (%.1f s)\n", res.pass ? "PASS" : "FAIL", res.experiment.c_str(),
                res.elapsed_seconds);
}

int run_catalog_experiment(const std::string& id, const std::string& config, uint64_t seed,
                           const std::string& out) {
    pnlw::RunManifest manifest;
    manifest.experiment = id;
    manifest.seed = seed;
    manifest.params = load_config(config);
    manifest.out_dir = out;
    const pnlw::ExperimentResult res = pnlw::run_experiment(manifest);
    print_result(res);
    return res.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral simulator and verification harness for the cubic wave equation on S^3"};
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand name

    std::string config, out;
    uint64_t seed = 1;
    app.add_option("--config", config, "JSON config file merged into experiment parameters");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "output directory (runs land in <out>/<manifest-hash>/)");

    // one subcommand per catalog id; scattering-fit carries its own flags
    static double sf_q = 6.0, sf_tmin = 2.0, sf_tmax = 40.0;
    static int sf_tcount = 16;
    static std::string sf_manifest;
    for (const auto& entry : pnlw::experiment_catalog()) {
        auto* sub = app.add_subcommand(entry.id, entry.statement);
        if (entry.id == "scattering-fit") {
            sub->add_option("--q", sf_q, "Lebesgue exponent in (18/5, 6]");
            sub->add_option("--t-min", sf_tmin);
            sub->add_option("--t-max", sf_tmax);
            sub->add_option("--t-count", sf_tcount);
            sub->add_option("--run-manifest", sf_manifest, "JSON file with solver parameters");
            sub->callback([&] {
                pnlw::RunManifest manifest;
                manifest.experiment = "scattering-fit";
                manifest.seed = seed;
                manifest.params = load_config(sf_manifest.empty() ? config : sf_manifest);
                manifest.params["q"] = sf_q;
                manifest.params["t_min"] = sf_tmin;
                manifest.params["t_max"] = sf_tmax;
                manifest.params["t_count"] = sf_tcount;
                manifest.out_dir = out;
                const pnlw::ExperimentResult res = pnlw::run_experiment(manifest);
                print_result(res);
                std::exit(res.pass ? 0 : 1);
            });
            continue;
        }
        sub->callback([&, id = entry.id] { std::exit(run_catalog_experiment(id, config, seed, out)); });
    }

    auto* list = app.add_subcommand("list", "list experiment ids and what they verify");
    list->callback([&] {
        for (const auto& entry : pnlw::experiment_catalog())
            std::printf("%-20s %-40s %s\n", entry.id.c_str(), entry.module_op.c_str(),
                        entry.statement.c_str());
        std::exit(0);
    });

    // simulate: run the solver and persist the trajectory
    auto* sim = app.add_subcommand("simulate", "integrate the cubic equation and persist CSV");
    std::string mode = "full";
    double sigma = 0.0, alpha = 1.55, dt = 2e-3, t_span = 6.283185307179586;
    double amplitude = 0.25;
    int n_max = 8;
    sim->add_option("--mode", mode, "full | perturbation");
    sim->add_option("--sigma", sigma);
    sim->add_option("--alpha", alpha);
    sim->add_option("--n-max", n_max);
    sim->add_option("--dt", dt);
    sim->add_option("--t-span", t_span);
    sim->add_option("--amplitude", amplitude);
    sim->callback([&] {
        using namespace pnlw;
        SphereContext ctx(n_max, 4 * (n_max - 1));
        const CoefficientProfile profile = make_profile(sigma, alpha, n_max);
        Rng rng = Rng::stream(seed, "simulate-data");
        const RandomDraw draw = sample_draw(n_max, DrawDistribution::gaussian, rng);
        const StatePair data = draw_scaled_data(profile, nullptr, draw, amplitude);
        const NlwSolver solver(ctx);
        SolveOptions opts;
        opts.t_begin = 0.0;
        opts.t_end = t_span;
        opts.dt = dt;
        Trajectory traj;
        if (mode == "perturbation") {
            const StatePair zero(n_max);
            traj = solver.solve(zero, &data, opts);
        } else {
            traj = solver.solve(data, nullptr, opts);
        }
        const std::string dir = out.empty() ? "." : out;
        std::filesystem::create_directories(dir);
        save_trajectory_csv(traj, dir + "/trajectory.csv");
        json manifest;
        manifest["mode"] = mode;
        manifest["sigma"] = sigma;
        manifest["alpha"] = alpha;
        manifest["n_max"] = n_max;
        manifest["dt"] = dt;
        manifest["t_span"] = t_span;
        manifest["amplitude"] = amplitude;
        manifest["seed"] = seed;
        manifest["blowup"] = traj.blowup.blew_up;
        if (traj.blowup.blew_up) manifest["last_valid_time"] = traj.blowup.last_valid_time;
        std::ofstream(dir + "/run.json") << manifest.dump(2) << "\n";
        std::printf("wrote %s/trajectory.csv (%zu snapshots)\n", dir.c_str(), traj.snaps.size());
        std::exit(traj.blowup.blew_up ? 1 : 0);
    });

    // tail-experiment: weighted-norm tail of the linear flow
    auto* tail = app.add_subcommand("tail-experiment", "tail of the weighted space-time norm");
    int regime = 2, n_cutoff = 0, draws = 2000;
    std::vector<double> levels;
    std::string distribution = "gaussian";
    tail->add_option("--regime", regime, "1, 2 or 3");
    tail->add_option("--n-cutoff", n_cutoff, "projection cutoff for regimes 1 and 3");
    tail->add_option("--levels", levels, "explicit exceedance levels");
    tail->add_option("--draws", draws);
    tail->add_option("--n-max", n_max);
    tail->add_option("--sigma", sigma);
    tail->add_option("--alpha", alpha);
    tail->add_option("--distribution", distribution, "gaussian | rademacher");
    tail->callback([&] {
        using namespace pnlw;
        SphereContext ctx(n_max, 2 * (n_max - 1));
        const CoefficientProfile profile = make_profile(sigma, alpha, n_max);
        TailExperimentConfig cfg;
        cfg.regime = regime;
        cfg.cutoff = n_cutoff;
        cfg.n_draws = draws;
        cfg.levels = levels;
        cfg.seed = seed;
        cfg.dist = distribution == "rademacher" ? DrawDistribution::rademacher
                                                : DrawDistribution::gaussian;
        const TailExperimentResult res = tail_experiment(ctx, profile, nullptr, cfg);
        const std::string dir = out.empty() ? "." : out;
        std::filesystem::create_directories(dir);
        save_tail_csv(res.tail, dir + "/tail.csv");
        std::printf("wrote %s/tail.csv (%ld scored draws)\n", dir.c_str(), res.tail.n_samples);
        std::exit(0);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
