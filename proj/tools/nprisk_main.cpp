// Command-line front end: fit, riskmap, simulate, study, ik.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 config error.
// Progress goes to stderr; data goes to files or stdout only.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nprisk/bootstrap.hpp"
#include "nprisk/csv.hpp"
#include "nprisk/fit.hpp"
#include "nprisk/parallel.hpp"
#include "nprisk/rng.hpp"
#include "nprisk/simulation.hpp"
#include "nprisk/spatial.hpp"

namespace {

using namespace nprisk;

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(field, &used);
            if (used != field.size()) throw std::invalid_argument(field);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse " + what + " entry '" + field + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + " list is empty");
    return out;
}

struct BandwidthOption {
    std::optional<BandwidthMatrix> trend;
    std::optional<BandwidthMatrix> variance;
};

// "auto" | "h11,h12,h22" | "h11,h12,h22:g11,g12,g22"
BandwidthOption parse_bandwidth(const std::string& text) {
    BandwidthOption out;
    if (text.empty() || text == "auto") return out;
    auto make = [](const std::vector<double>& v) {
        if (v.size() != 3) throw ConfigError("bandwidth needs exactly 3 numbers h11,h12,h22");
        try {
            return BandwidthMatrix::from_elements(v[0], v[1], v[2]);
        } catch (const Error& e) {
            throw ConfigError(std::string("bad bandwidth: ") + e.what());
        }
    };
    std::size_t colon = text.find(':');
    out.trend = make(parse_number_list(text.substr(0, colon), "bandwidth"));
    if (colon != std::string::npos)
        out.variance = make(parse_number_list(text.substr(colon + 1), "bandwidth"));
    return out;
}

GridSpec parse_grid_arg(const std::string& text) {
    std::vector<double> v = parse_number_list(text, "grid");
    if (v.size() != 2 || v[0] < 1 || v[1] < 1 || v[0] != std::floor(v[0]) ||
        v[1] != std::floor(v[1]))
        throw ConfigError("grid must be two positive integers nx,ny");
    GridSpec spec;
    spec.nx = static_cast<int>(v[0]);
    spec.ny = static_cast<int>(v[1]);
    return spec;
}

std::vector<Location> resolve_targets(const std::string& targets_path, const std::string& grid_arg,
                                      const SpatialSample& sample) {
    if (!targets_path.empty() && !grid_arg.empty())
        throw ConfigError("choose one of --targets and --grid");
    if (!targets_path.empty()) return read_locations_csv(targets_path);
    if (grid_arg.empty()) throw ConfigError("estimation locations required: --targets or --grid");
    GridSpec spec = parse_grid_arg(grid_arg);
    spec.x1_min = spec.x1_max = sample.locations[0].x1;
    spec.x2_min = spec.x2_max = sample.locations[0].x2;
    for (const Location& p : sample.locations) {
        spec.x1_min = std::min(spec.x1_min, p.x1);
        spec.x1_max = std::max(spec.x1_max, p.x1);
        spec.x2_min = std::min(spec.x2_min, p.x2);
        spec.x2_max = std::max(spec.x2_max, p.x2);
    }
    return make_grid(spec);
}

void write_matrix_line(std::ostream& out, const char* label, const BandwidthMatrix& H) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s [%.8g, %.8g; %.8g, %.8g]\n", label, H.matrix()(0, 0),
                  H.matrix()(0, 1), H.matrix()(1, 0), H.matrix()(1, 1));
    out << buf;
}

void write_sb_model(std::ostream& out, const char* label, const SBModel& model) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: nugget %.8g, sill %.8g, %d basis terms\n", label,
                  model.nugget(), model.sill(), static_cast<int>(model.nodes().size()));
    out << buf;
    for (int j = 0; j < model.nodes().size(); ++j) {
        std::snprintf(buf, sizeof(buf), "  node %.8g weight %.8g\n", model.nodes()[j],
                      model.weights()[j]);
        out << buf;
    }
}

void write_fit_report(const std::string& path, const FittedComponents& fit, double wall_seconds,
                      const std::string& extra) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write to " + path);
    out << "sample size: " << fit.sample.n() << "\n";
    out << "estimation locations: " << fit.targets.size() << "\n";
    write_matrix_line(out, "trend bandwidth H:", fit.H);
    write_matrix_line(out, "variance bandwidth H2:", fit.H2);
    out << "variogram bandwidth h3: " << fit.h3 << "\n";
    out << "correction iterations: " << fit.iterations << "\n";
    write_sb_model(out, "pilot variogram", fit.pilot_variogram_model);
    write_sb_model(out, "corrected variogram", fit.corrected_variogram_model);
    if (!extra.empty()) out << extra;
    out << "wall time: " << wall_seconds << " s\n";
}

FitConfig fit_config_from_flags(const std::string& bandwidth_arg, const std::string& h3_arg) {
    FitConfig config;
    BandwidthOption bw = parse_bandwidth(bandwidth_arg);
    config.trend_bandwidth = bw.trend;
    config.variance_bandwidth = bw.variance;
    if (!h3_arg.empty() && h3_arg != "auto") {
        double h3 = parse_number_list(h3_arg, "h3")[0];
        if (h3 <= 0.0) throw ConfigError("h3 must be positive");
        config.h3 = h3;
    }
    return config;
}

int cmd_fit(const std::string& input, const std::string& output, const std::string& bandwidth_arg,
            const std::string& h3_arg, bool allow_small) {
    auto start = std::chrono::steady_clock::now();
    SpatialSample sample = read_sample_csv(input, allow_small ? 3 : 10);
    FittedComponents fit = fit_components(sample, {}, fit_config_from_flags(bandwidth_arg, h3_arg));

    std::ofstream out(output);
    if (!out) throw ParseError("cannot write to " + output);
    out << "x1,x2,y,trend,variance,residual,std_residual\n";
    char buf[256];
    for (int i = 0; i < sample.n(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.8g,%.8g,%.8g,%.8g\n",
                      sample.locations[i].x1, sample.locations[i].x2, sample.values[i],
                      fit.trend_sample[i], fit.variance_sample[i], fit.residuals[i],
                      fit.std_residuals[i]);
        out << buf;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_fit_report(output + ".report.txt", fit, wall, "");
    std::cerr << "fit written to " << output << " (report " << output << ".report.txt)\n";
    return 0;
}

int cmd_riskmap(const std::string& input, const std::string& output, const std::string& mode,
                const std::string& thresholds_arg, int B, std::uint64_t seed,
                const std::string& bandwidth_arg, const std::string& h3_arg,
                const std::string& grid_arg, const std::string& targets_path, int threads,
                bool allow_small) {
    auto start = std::chrono::steady_clock::now();
    if (mode != "conditional" && mode != "unconditional")
        throw ConfigError("mode must be conditional or unconditional");
    std::vector<double> thresholds = parse_number_list(thresholds_arg, "thresholds");
    if (B < 1) throw ConfigError("B must be at least 1");

    SpatialSample sample = read_sample_csv(input, allow_small ? 3 : 10);
    std::vector<Location> targets = resolve_targets(targets_path, grid_arg, sample);

    FittedComponents fit =
        fit_components(sample, targets, fit_config_from_flags(bandwidth_arg, h3_arg));

    BootstrapConfig boot;
    boot.replicates = B;
    boot.seed = seed;
    boot.threads = threads;
    BootstrapMode bmode =
        mode == "conditional" ? BootstrapMode::Conditional : BootstrapMode::Unconditional;
    BootstrapEnsemble ensemble = run_bootstrap(fit, bmode, boot);

    std::vector<RiskMap> maps;
    maps.reserve(thresholds.size());
    for (double c : thresholds) maps.push_back(risk_from_ensemble(ensemble, targets, c));
    write_riskmap_csv(output, maps);

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream extra;
    extra << "mode: " << mode << "\nbootstrap replicates: " << B << "\nseed: " << seed << "\n";
    write_fit_report(output + ".report.txt", fit, wall, extra.str());
    std::cerr << "risk map written to " << output << " (report " << output << ".report.txt)\n";
    return 0;
}

int cmd_simulate(const std::string& output, const std::string& scenario_name,
                 const std::string& trend_arg, const std::string& variance_arg,
                 const std::string& matern_arg, const std::string& grid_arg,
                 const std::string& design, std::uint64_t seed) {
    ScenarioSpec spec;
    if (!scenario_name.empty()) {
        auto found = find_scenario(scenario_name);
        if (!found) throw ConfigError("unknown scenario '" + scenario_name + "'");
        spec = *found;
    }
    if (!trend_arg.empty()) spec.trend = parse_trend(trend_arg);
    if (!variance_arg.empty()) spec.variance = parse_variance(variance_arg);
    if (!matern_arg.empty()) {
        std::vector<double> v = parse_number_list(matern_arg, "matern");
        if (v.size() != 3) throw ConfigError("matern needs c0,a,nu");
        spec.matern = MaternParams{v[0], v[1], v[2]};
        spec.matern.validate();
    }
    if (!grid_arg.empty()) spec.grid = parse_grid_arg(grid_arg);
    if (design == "random")
        spec.random_design = true;
    else if (!design.empty() && design != "regular")
        throw ConfigError("design must be regular or random");

    std::mt19937_64 rng = substream(seed, 0);
    std::vector<Location> locs;
    if (spec.random_design) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        locs.resize(static_cast<std::size_t>(spec.grid.nx) * spec.grid.ny);
        for (auto& p : locs) {
            p.x1 = unit(rng);
            p.x2 = unit(rng);
        }
    } else {
        locs = make_grid(spec.grid);
    }
    FieldSimulator sim(locs, spec.trend, spec.variance, spec.matern);
    SpatialSample sample{locs, sim.draw(rng)};
    write_sample_csv(output, sample);
    std::cerr << "simulated field (" << sample.n() << " sites) written to " << output << "\n";
    return 0;
}

int cmd_study(const std::string& scenario_name, bool list, int N, int B, std::uint64_t seed,
              bool has_seed, int threads, bool force_ik, const std::string& output) {
    if (list) {
        for (const ScenarioSpec& s : named_scenarios()) std::cout << s.name << "\n";
        return 0;
    }
    auto found = find_scenario(scenario_name);
    if (!found) throw ConfigError("unknown scenario '" + scenario_name + "' (try --list)");
    ScenarioSpec spec = *found;
    if (N > 0) spec.n_simulations = N;
    if (B > 0) spec.bootstrap_replicates = B;
    if (has_seed) spec.seed = seed;
    if (force_ik) spec.with_ik = true;

    std::cerr << "running " << spec.name << ": N=" << spec.n_simulations
              << " B=" << spec.bootstrap_replicates << " seed=" << spec.seed << "\n";
    ErrorSummary summary = run_study(spec, threads, &std::cerr);
    if (output.empty())
        write_error_summary_csv(std::cout, summary);
    else
        write_error_summary_csv(output, summary);
    return 0;
}

int cmd_ik(const std::string& input, const std::string& output, const std::string& thresholds_arg,
           const std::string& grid_arg, const std::string& targets_path, bool allow_small) {
    std::vector<double> thresholds = parse_number_list(thresholds_arg, "thresholds");
    SpatialSample sample = read_sample_csv(input, allow_small ? 3 : 10);
    std::vector<Location> targets = resolve_targets(targets_path, grid_arg, sample);
    std::vector<IkResult> results;
    results.reserve(thresholds.size());
    for (double c : thresholds) results.push_back(ik_exceedance(sample, targets, c));
    write_ik_csv(output, targets, thresholds, results);
    std::cerr << "indicator-kriging map written to " << output << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonparametric exceedance-risk mapping for heteroscedastic spatial data"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "fit trend, variance and variogram to a CSV sample");
    std::string fit_input, fit_output = "fit.csv", fit_bw = "auto", fit_h3 = "auto";
    bool fit_small = false;
    fit->add_option("--input", fit_input, "input CSV with header x1,x2,y")->required();
    fit->add_option("--output", fit_output, "output CSV of fitted values");
    fit->add_option("--bandwidth", fit_bw, "auto | h11,h12,h22[:g11,g12,g22]");
    fit->add_option("--h3", fit_h3, "auto | positive number");
    fit->add_flag("--allow-small", fit_small, "accept inputs with fewer than 10 rows");
    fit->set_config("--config");

    // riskmap
    auto* risk = app.add_subcommand("riskmap", "bootstrap exceedance-probability map");
    std::string rm_input, rm_output = "riskmap.csv", rm_mode = "conditional";
    std::string rm_thresholds, rm_bw = "auto", rm_h3 = "auto", rm_grid, rm_targets;
    int rm_B = 1000, rm_threads = 0;
    std::uint64_t rm_seed = 0;
    bool rm_small = false;
    risk->add_option("--input", rm_input, "input CSV with header x1,x2,y")->required();
    risk->add_option("--output", rm_output, "output risk-map CSV");
    risk->add_option("--mode", rm_mode, "conditional | unconditional");
    risk->add_option("--thresholds", rm_thresholds, "comma-separated threshold list")->required();
    risk->add_option("--B", rm_B, "bootstrap replicates");
    risk->add_option("--seed", rm_seed, "RNG seed");
    risk->add_option("--bandwidth", rm_bw, "auto | h11,h12,h22[:g11,g12,g22]");
    risk->add_option("--h3", rm_h3, "auto | positive number");
    risk->add_option("--grid", rm_grid, "nx,ny estimation grid over the data bounding box");
    risk->add_option("--targets", rm_targets, "CSV of estimation locations (header x1,x2)");
    risk->add_option("--threads", rm_threads, "worker threads (0 = all cores)");
    risk->add_flag("--allow-small", rm_small, "accept inputs with fewer than 10 rows");
    risk->set_config("--config");

    // simulate
    auto* sim = app.add_subcommand("simulate", "draw one synthetic field as a CSV sample");
    std::string sim_output = "field.csv", sim_scenario, sim_trend, sim_variance, sim_matern,
                sim_grid, sim_design;
    std::uint64_t sim_seed = 0;
    sim->add_option("--output", sim_output, "output CSV");
    sim->add_option("--scenario", sim_scenario, "start from a named scenario");
    sim->add_option("--trend", sim_trend, "mu1 | mu2 | mu3");
    sim->add_option("--variance", sim_variance, "var1 | var2 | var3");
    sim->add_option("--matern", sim_matern, "c0,a,nu");
    sim->add_option("--grid", sim_grid, "nx,ny design size");
    sim->add_option("--design", sim_design, "regular | random");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->set_config("--config");

    // study
    auto* study = app.add_subcommand("study", "Monte Carlo error study for a named scenario");
    std::string study_scenario, study_output;
    int study_N = 0, study_B = 0, study_threads = 0;
    std::uint64_t study_seed = 0;
    bool study_list = false, study_ik = false;
    study->add_option("--scenario", study_scenario, "scenario name (see --list)");
    study->add_flag("--list", study_list, "list scenario names and exit");
    study->add_option("--N", study_N, "override simulated-field count");
    study->add_option("--B", study_B, "override bootstrap replicates");
    auto* study_seed_opt = study->add_option("--seed", study_seed, "override scenario seed");
    study->add_option("--threads", study_threads, "worker threads (0 = all cores)");
    study->add_flag("--ik", study_ik, "also score the indicator-kriging baseline");
    study->add_option("--output", study_output, "summary CSV path (default: stdout)");
    study->set_config("--config");

    // ik
    auto* ik = app.add_subcommand("ik", "indicator-kriging exceedance map");
    std::string ik_input, ik_output = "ik.csv", ik_thresholds, ik_grid, ik_targets;
    bool ik_small = false;
    ik->add_option("--input", ik_input, "input CSV with header x1,x2,y")->required();
    ik->add_option("--output", ik_output, "output CSV");
    ik->add_option("--thresholds", ik_thresholds, "comma-separated threshold list")->required();
    ik->add_option("--grid", ik_grid, "nx,ny estimation grid over the data bounding box");
    ik->add_option("--targets", ik_targets, "CSV of estimation locations (header x1,x2)");
    ik->add_flag("--allow-small", ik_small, "accept inputs with fewer than 10 rows");
    ik->set_config("--config");

    try {
        app.parse(argc, argv);
        if (fit->parsed())
            return cmd_fit(fit_input, fit_output, fit_bw, fit_h3, fit_small);
        if (risk->parsed())
            return cmd_riskmap(rm_input, rm_output, rm_mode, rm_thresholds, rm_B, rm_seed, rm_bw,
                               rm_h3, rm_grid, rm_targets, rm_threads, rm_small);
        if (sim->parsed())
            return cmd_simulate(sim_output, sim_scenario, sim_trend, sim_variance, sim_matern,
                                sim_grid, sim_design, sim_seed);
        if (study->parsed())
            return cmd_study(study_scenario, study_list, study_N, study_B, study_seed,
                             study_seed_opt->count() > 0, study_threads, study_ik, study_output);
        if (ik->parsed())
            return cmd_ik(ik_input, ik_output, ik_thresholds, ik_grid, ik_targets, ik_small);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 4;
    } catch (const Error& e) {
        const char* category = e.kind() == ErrorKind::Input
                                   ? "input"
                                   : (e.kind() == ErrorKind::Numerical ? "numerical" : "config");
        std::cerr << "error: " << category << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Input ? 2 : (e.kind() == ErrorKind::Numerical ? 3 : 4);
    } catch (const std::exception& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
