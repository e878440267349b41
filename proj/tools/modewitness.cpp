// modewitness: mode-intrinsic entanglement witness toolkit.
//
// Subcommands glue JSON state recipes to basis scans, witness minimization,
// loss sweeps, simulated homodyne experiments and cluster optimization.
// Outputs are plot-ready CSV/JSON written atomically; every output references
// the hash of the run manifest.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mw/cluster.hpp"
#include "mw/homodyne.hpp"
#include "mw/recipe.hpp"
#include "mw/witness.hpp"

using namespace mw;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct Manifest {
    std::string command;
    std::string recipe_path;
    std::string recipe_fp;
    json params;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;

    json to_json(double wall_s) const {
        json j;
        j["tool"] = "modewitness";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["recipe"] = recipe_path;
        j["recipe_fingerprint"] = recipe_fp;
        j["params"] = params;
        j["seed"] = seed;
        j["outputs"] = outputs;
        j["wall_clock_s"] = wall_s;
        return j;
    }
    std::string hash() const {
        json j = to_json(0.0);
        j.erase("wall_clock_s");
        return hex64(fnv1a64(j.dump()));
    }
};

void atomic_write(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename into " + path);
}

std::string fmt(double v) { return format_double(v); }

std::vector<double> parse_grid(const std::string& spec) {
    // "lo:hi:count" inclusive linear grid, or comma-separated values
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        double lo, hi;
        int count;
        if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 1)
            throw std::runtime_error("bad grid spec: " + spec);
        for (int i = 0; i < count; ++i)
            out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        return out;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<MeasurementSetting> parse_settings(const std::string& spec, int modes, int bins) {
    // "phi1,phi2;phi1,phi2;..."
    std::vector<MeasurementSetting> out;
    std::stringstream ss(spec);
    std::string group;
    while (std::getline(ss, group, ';')) {
        std::vector<double> phis = parse_grid(group);
        if (static_cast<int>(phis.size()) != modes)
            throw std::runtime_error("setting needs one angle per mode: " + group);
        MeasurementSetting s;
        s.phi = Eigen::Map<const Eigen::VectorXd>(phis.data(), phis.size());
        s.bins = bins;
        out.push_back(s);
    }
    if (out.empty()) throw std::runtime_error("settings list empty");
    return out;
}

struct StateData {
    BuiltState built;
    StateRecipe recipe;
};

WitnessContext context_for(const StateData& st, const GeneratorSet& gens, const Partition& part) {
    if (st.built.is_mixed()) return make_witness_context(*st.built.lossy, gens, part);
    return make_witness_context(st.built.pure, gens, part);
}

Eigen::MatrixXd gamma_for(const StateData& st, const GeneratorSet& gens) {
    if (st.built.is_mixed()) return cov_matrix(*st.built.lossy, gens);
    return cov_matrix(st.built.pure, gens);
}

StateEnsemble ensemble_for(const StateData& st) {
    if (st.built.is_mixed()) return StateEnsemble::from(*st.built.lossy);
    return StateEnsemble::from(st.built.pure);
}

std::vector<Eigen::MatrixXd> cluster_hints(const StateData& st) {
    std::vector<Eigen::MatrixXd> hints;
    if (st.recipe.interferometer.type == "cluster" && st.built.cluster_opt) {
        Eigen::MatrixXcd uv =
            cluster_unitary(st.recipe.interferometer.adjacency, st.built.cluster_opt->o_free);
        hints.push_back(quadrature_rep(uv.adjoint()));
    }
    return hints;
}

json witness_report_json(const WitnessReport& rep) {
    json j;
    j["w_q"] = rep.w_q;
    j["sampled_min"] = rep.sampled_min;
    j["order"] = rep.order;
    j["partition"] = rep.partition;
    j["converged"] = rep.converged;
    j["entangled_witnessed"] = rep.entangled_witnessed;
    j["evaluations"] = rep.evaluations;
    std::vector<double> arg(rep.argmin.data(), rep.argmin.data() + rep.argmin.size());
    j["argmin_theta_phi"] = arg;
    if (rep.seed_transform.size() != 0) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index r = 0; r < rep.seed_transform.rows(); ++r) {
            std::vector<double> row;
            for (Eigen::Index c = 0; c < rep.seed_transform.cols(); ++c)
                row.push_back(rep.seed_transform(r, c));
            rows.push_back(row);
        }
        j["seed_transform"] = rows;  // realized basis is mesh(argmin) * seed_transform
    }
    json restarts = json::array();
    for (const auto& t : rep.restarts) {
        json e;
        e["phase"] = t.phase;
        e["value"] = t.value;
        restarts.push_back(e);
    }
    j["restarts"] = restarts;
    return j;
}

std::string histogram_csv(const HomodyneDataset& ds) {
    std::string out;
    out += "# modewitness homodyne histogram\n# phi=";
    for (int i = 0; i < ds.setting.modes(); ++i)
        out += (i ? "," : "") + fmt(ds.setting.phi[i]);
    out += "\n# grid_min=" + fmt(ds.setting.grid_min) + " grid_max=" + fmt(ds.setting.grid_max) +
           " bins=" + std::to_string(ds.setting.bins) + "\n";
    out += "# n_samples=" + std::to_string(ds.n_samples) + " seed=" + std::to_string(ds.seed) + "\n";
    out += "cell,count\n";
    for (Eigen::Index c = 0; c < ds.counts.size(); ++c)
        if (ds.counts[c] != 0.0)
            out += std::to_string(c) + "," + fmt(ds.counts[c]) + "\n";
    return out;
}

HomodyneDataset load_histogram(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open histogram: " + path);
    HomodyneDataset ds;
    std::string line;
    MeasurementSetting s;
    std::vector<double> phis;
    while (std::getline(in, line)) {
        if (line.rfind("# phi=", 0) == 0) {
            phis = parse_grid(line.substr(6));
        } else if (line.rfind("# grid_min=", 0) == 0) {
            std::sscanf(line.c_str(), "# grid_min=%lf grid_max=%lf bins=%d", &s.grid_min,
                        &s.grid_max, &s.bins);
        } else if (line.rfind("# n_samples=", 0) == 0) {
            long long n;
            unsigned long long seed;
            std::sscanf(line.c_str(), "# n_samples=%lld seed=%llu", &n, &seed);
            ds.n_samples = n;
            ds.seed = seed;
        } else if (!line.empty() && line[0] != '#' && line != "cell,count") {
            break;
        }
    }
    s.phi = Eigen::Map<const Eigen::VectorXd>(phis.data(), phis.size());
    ds.setting = s;
    ds.modes = s.modes();
    Eigen::Index cells = 1;
    for (int k = 0; k < ds.modes; ++k) cells *= s.bins;
    ds.counts = Eigen::VectorXd::Zero(cells);
    do {
        if (line.empty() || line[0] == '#' || line == "cell,count") continue;
        long long cell;
        double count;
        if (std::sscanf(line.c_str(), "%lld,%lf", &cell, &count) == 2) ds.counts[cell] = count;
    } while (std::getline(in, line));
    return ds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mode-intrinsic entanglement witness toolkit"};
    app.require_subcommand(1);

    std::string recipe_path, out_dir = ".", partition_spec = "1|2";
    int order = 2, grid = 64, bins = 192;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool needs_partition = true) {
        cmd->add_option("--recipe", recipe_path, "state recipe JSON")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--order", order, "maximum generator order N");
        if (needs_partition)
            cmd->add_option("--partition", partition_spec, "partition spec, e.g. \"12|3\"");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "RNG root seed");
    };

    auto* scan = app.add_subcommand("scan", "E(theta, phi) landscape over the basis grid");
    add_common(scan);
    scan->add_option("--grid", grid, "points per angle");

    std::vector<std::string> partition_list;
    auto* witness = app.add_subcommand("witness", "minimize E over all mode bases");
    add_common(witness, false);
    witness->add_option("--partition", partition_list, "partition spec(s), repeatable")->required();
    int restarts = 3;
    witness->add_option("--restarts", restarts, "optimizer restarts");
    std::string optimizer_config_path;
    witness->add_option("--optimizer-config", optimizer_config_path,
                        "optimizer config JSON (strategy, grid, budget, ...)");

    auto* sweep = app.add_subcommand("loss-sweep", "witness over (eta, angle) grids");
    add_common(sweep);
    std::string eta_spec = "0.5:1.0:11", angle_spec = "-0.7853981633974483:0.7853981633974483:9";
    sweep->add_option("--eta-grid", eta_spec, "eta grid lo:hi:count");
    sweep->add_option("--angle-grid", angle_spec,
                      "grid for the last subtraction angle, lo:hi:count");

    auto* experiment = app.add_subcommand("experiment", "simulated homodyne Fisher estimation");
    add_common(experiment);
    std::string settings_spec = "0,0;1.5707963267948966,1.5707963267948966";
    long long n_samples = 1000000;
    int reps = 100;
    int map_grid = 17;
    std::string theta0_spec;
    std::vector<std::string> histogram_paths;
    bool dump_histograms = false;
    experiment->add_option("--settings", settings_spec, "measurement settings phi1,phi2;...");
    experiment->add_option("--samples", n_samples, "samples per realization");
    experiment->add_option("--reps", reps, "independent realizations");
    experiment->add_option("--map-grid", map_grid, "witness map points per angle");
    experiment->add_option("--bins", bins, "histogram bins per mode");
    experiment->add_option("--theta0", theta0_spec,
                           "measurement basis parameters (flattened theta...,phi...)");
    experiment->add_option("--histogram", histogram_paths,
                           "externally produced histogram file per setting (skips sampling)");
    experiment->add_flag("--dump-histograms", dump_histograms, "write first-rep histograms");

    auto* cluster = app.add_subcommand("cluster-opt", "optimize the cluster orthogonal O");
    add_common(cluster, false);

    CLI11_PARSE(app, argc, argv);

    try {
        auto t0 = std::chrono::steady_clock::now();
        StateData st;
        st.recipe = load_recipe(recipe_path);
        if (seed_set) st.recipe.seed = seed;

        Manifest manifest;
        manifest.recipe_path = recipe_path;
        manifest.seed = st.recipe.seed;

        std::filesystem::create_directories(out_dir);
        auto out_path = [&](const std::string& name) { return out_dir + "/" + name; };
        auto finish = [&](const json& extra_report, const std::string& report_name) {
            double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!report_name.empty()) {
                json rep = extra_report;
                rep["manifest_hash"] = manifest.hash();
                manifest.outputs.push_back(report_name);
                atomic_write(out_path(report_name), rep.dump(2) + "\n");
            }
            atomic_write(out_path("manifest_" + manifest.command + ".json"),
                         manifest.to_json(wall).dump(2) + "\n");
        };

        if (*scan) {
            manifest.command = "scan";
            manifest.params = {{"order", order}, {"partition", partition_spec}, {"grid", grid}};
            st.built = build_state(st.recipe);
            manifest.recipe_fp = recipe_fingerprint(st.recipe);
            Partition part = parse_partition(partition_spec, st.recipe.modes);
            if (st.recipe.modes != 2)
                throw std::runtime_error("scan: full grids are two-mode; use `witness` for m > 2");

            std::vector<WitnessContext> ctxs;
            for (int n = 1; n <= order; ++n)
                ctxs.push_back(context_for(st, build_generator_set(n, 2), part));

            std::string csv = "# modewitness scan manifest=" + manifest.hash() + "\n";
            csv += "theta,phi";
            for (int n = 1; n <= order; ++n) csv += ",E_N" + std::to_string(n);
            csv += "\n";
            std::vector<std::string> rows(static_cast<std::size_t>(grid) * grid);
            std::vector<double> minima(order, 1e300);
            std::vector<std::pair<double, double>> argmins(order);
            std::mutex mu;
            parallel_for(rows.size(), [&](std::size_t idx) {
                int i = static_cast<int>(idx) / grid, j = static_cast<int>(idx) % grid;
                double theta = 2 * M_PI * i / grid, phi = 2 * M_PI * j / grid;
                Eigen::VectorXd v(2);
                v << theta, phi;
                std::string row = fmt(theta) + "," + fmt(phi);
                std::vector<double> vals(order);
                for (int n = 1; n <= order; ++n) {
                    vals[n - 1] = ctxs[n - 1].eval(v);
                    row += "," + fmt(vals[n - 1]);
                }
                rows[idx] = row + "\n";
                std::lock_guard<std::mutex> lock(mu);
                for (int n = 0; n < order; ++n)
                    if (vals[n] < minima[n]) {
                        minima[n] = vals[n];
                        argmins[n] = {theta, phi};
                    }
            });
            for (int n = 0; n < order; ++n)
                csv += "# argmin_N" + std::to_string(n + 1) + " theta=" + fmt(argmins[n].first) +
                       " phi=" + fmt(argmins[n].second) + " E=" + fmt(minima[n]) + "\n";
            for (const auto& r : rows) csv += r;
            manifest.outputs.push_back("scan.csv");
            atomic_write(out_path("scan.csv"), csv);
            finish(json(), "");
            std::printf("scan: %dx%d grid written to %s\n", grid, grid, out_path("scan.csv").c_str());
        } else if (*witness) {
            manifest.command = "witness";
            manifest.params = {{"order", order}, {"partitions", partition_list},
                               {"restarts", restarts}};
            st.built = build_state(st.recipe);
            manifest.recipe_fp = recipe_fingerprint(st.recipe);
            GeneratorSet gens = build_generator_set(order, st.recipe.modes);
            std::vector<Partition> parts;
            for (const auto& p : partition_list) parts.push_back(parse_partition(p, st.recipe.modes));

            Eigen::MatrixXd gamma, qmat;
            if (st.built.is_mixed()) {
                gamma = cov_matrix(*st.built.lossy, gens);
                qmat = qfi_matrix(*st.built.lossy, gens);
            } else {
                gamma = cov_matrix(st.built.pure, gens);
                qmat = 4.0 * gamma;
            }
            OptimizerConfig cfg;
            cfg.seed = st.recipe.seed ? st.recipe.seed : 1;
            cfg.ga_restarts = restarts;
            cfg.restarts = std::max(8, restarts * 3);
            cfg.strategy = st.recipe.modes > 2 ? OptStrategy::Genetic : OptStrategy::GridSimplex;
            if (!optimizer_config_path.empty()) {
                std::ifstream in(optimizer_config_path);
                if (!in) throw std::runtime_error("cannot open " + optimizer_config_path);
                json oc = json::parse(in);
                if (oc.contains("strategy"))
                    cfg.strategy = oc["strategy"] == "genetic" ? OptStrategy::Genetic
                                                               : OptStrategy::GridSimplex;
                cfg.grid_per_dim = oc.value("grid_per_dim", cfg.grid_per_dim);
                cfg.restarts = oc.value("restarts", cfg.restarts);
                cfg.budget = oc.value("budget", cfg.budget);
                cfg.tolerance = oc.value("tolerance", cfg.tolerance);
                cfg.population = oc.value("population", cfg.population);
                cfg.elite = oc.value("elite", cfg.elite);
                cfg.mutation_sigma = oc.value("mutation_sigma", cfg.mutation_sigma);
                cfg.generations = oc.value("generations", cfg.generations);
                cfg.ga_restarts = oc.value("ga_restarts", cfg.ga_restarts);
                cfg.seed = oc.value("seed", cfg.seed);
                manifest.params["optimizer_config"] = oc;
            }
            std::vector<WitnessReport> reports =
                witness_table(qmat, gamma, gens, parts, cfg, cluster_hints(st));
            std::string trace_csv = "# modewitness witness trace manifest=" + manifest.hash() + "\n";
            trace_csv += "partition,phase,value\n";
            for (const auto& rep : reports)
                for (const auto& t : rep.restarts)
                    trace_csv += rep.partition + "," + t.phase + "," + fmt(t.value) + "\n";
            manifest.outputs.push_back("witness_trace.csv");
            atomic_write(out_path("witness_trace.csv"), trace_csv);
            json j;
            j["reports"] = json::array();
            for (const auto& rep : reports) j["reports"].push_back(witness_report_json(rep));
            finish(j, "witness.json");
            for (const auto& rep : reports)
                std::printf("W_Q[%s, N=%d] = %.6f%s\n", rep.partition.c_str(), rep.order, rep.w_q,
                            rep.entangled_witnessed ? "  (mode-intrinsic entangled, witnessed)" : "");
        } else if (*sweep) {
            manifest.command = "loss-sweep";
            manifest.params = {{"order", order}, {"partition", partition_spec},
                               {"eta_grid", eta_spec}, {"angle_grid", angle_spec}};
            manifest.recipe_fp = recipe_fingerprint(st.recipe);
            if (st.recipe.subtractions.empty())
                throw std::runtime_error("loss-sweep: recipe needs at least one subtraction");
            Partition part = parse_partition(partition_spec, st.recipe.modes);
            std::vector<double> etas = parse_grid(eta_spec);
            std::vector<double> angles = parse_grid(angle_spec);

            std::string csv = "# modewitness loss-sweep manifest=" + manifest.hash() + "\n";
            csv += "eta,angle";
            for (int n = 1; n <= order; ++n) csv += ",W_N" + std::to_string(n);
            csv += "\n";
            for (double angle : angles) {
                StateRecipe variant = st.recipe;
                variant.subtractions.back() = SubtractionSpec{angle, std::nullopt, std::nullopt};
                for (double eta : etas) {
                    StateData point;
                    point.recipe = variant;
                    point.built = build_state(variant, 0,
                                              std::vector<double>(variant.modes, eta));
                    csv += fmt(eta) + "," + fmt(angle);
                    for (int n = 1; n <= order; ++n) {
                        WitnessContext ctx = context_for(point, build_generator_set(n, 2), part);
                        OptimizerConfig cfg;
                        cfg.grid_per_dim = 24;
                        cfg.restarts = 6;
                        cfg.seed = st.recipe.seed ? st.recipe.seed : 1;
                        WitnessReport rep = mode_intrinsic_witness(ctx, cfg);
                        csv += "," + fmt(rep.w_q);
                    }
                    csv += "\n";
                }
            }
            manifest.outputs.push_back("loss_sweep.csv");
            atomic_write(out_path("loss_sweep.csv"), csv);
            finish(json(), "");
            std::printf("loss-sweep written to %s\n", out_path("loss_sweep.csv").c_str());
        } else if (*experiment) {
            manifest.command = "experiment";
            manifest.params = {{"settings", settings_spec}, {"samples", n_samples},
                               {"reps", reps},             {"order", 1},
                               {"partition", partition_spec}, {"bins", bins},
                               {"theta0", theta0_spec}};
            st.built = build_state(st.recipe);
            manifest.recipe_fp = recipe_fingerprint(st.recipe);
            const int m = st.recipe.modes;
            Partition part = parse_partition(partition_spec, m);
            GeneratorSet g1 = build_generator_set(1, m);

            if (!theta0_spec.empty()) {
                std::vector<double> flat = parse_grid(theta0_spec);
                BasisChange bc = clements_orthogonal(flat, m);
                if (st.built.is_mixed())
                    throw std::runtime_error("experiment: theta0 rotation on lossy recipes applies "
                                             "the basis change before loss; set it in the recipe");
                st.built.pure =
                    apply_passive_unitary(st.built.pure, mode_unitary_from_quadrature(bc.O));
            }
            std::vector<MeasurementSetting> settings = parse_settings(settings_spec, m, bins);
            StateEnsemble ens = ensemble_for(st);
            Eigen::MatrixXd gamma = gamma_for(st, g1);

            std::uint64_t root = st.recipe.seed ? st.recipe.seed : 1;
            const std::size_t n_set = settings.size();
            std::vector<GridPdf> pdfs(n_set);
            std::vector<Eigen::MatrixXd> analytic(n_set);
            for (std::size_t k = 0; k < n_set; ++k) {
                pdfs[k] = marginal_distribution(ens, settings[k]);
                analytic[k] = analytic_fisher(ens, g1, settings[k]);
            }

            // per realization per setting: sampled Fisher matrices
            std::vector<std::vector<Eigen::MatrixXd>> fishers(n_set);
            bool external = !histogram_paths.empty();
            if (external) {
                if (histogram_paths.size() != n_set)
                    throw std::runtime_error("experiment: one histogram per setting required");
                for (std::size_t k = 0; k < n_set; ++k) {
                    HomodyneDataset ds = load_histogram(histogram_paths[k]);
                    fishers[k].push_back(hellinger_fisher(ds, g1).mean);
                }
                reps = 1;
            } else {
                for (std::size_t k = 0; k < n_set; ++k) fishers[k].resize(reps);
                parallel_for(static_cast<std::size_t>(reps) * n_set, [&](std::size_t idx) {
                    std::size_t k = idx % n_set;
                    int rep = static_cast<int>(idx / n_set);
                    HomodyneDataset ds =
                        sample(pdfs[k], n_samples, derive_seed(root, 1000 * k + rep));
                    fishers[k][rep] = hellinger_fisher(ds, g1).mean;
                });
                if (dump_histograms) {
                    for (std::size_t k = 0; k < n_set; ++k) {
                        HomodyneDataset ds = sample(pdfs[k], n_samples, derive_seed(root, 1000 * k));
                        std::string name = "histogram_s" + std::to_string(k) + ".csv";
                        manifest.outputs.push_back(name);
                        atomic_write(out_path(name), histogram_csv(ds));
                    }
                }
            }

            // Fisher summary per setting
            json freport;
            freport["settings"] = json::array();
            std::vector<Eigen::MatrixXd> fmean(n_set);
            for (std::size_t k = 0; k < n_set; ++k) {
                const Eigen::Index gsz = static_cast<Eigen::Index>(g1.size());
                Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(gsz, gsz);
                for (const auto& f : fishers[k]) mean += f;
                mean /= fishers[k].size();
                Eigen::MatrixXd sd = Eigen::MatrixXd::Zero(gsz, gsz);
                if (fishers[k].size() > 1) {
                    for (const auto& f : fishers[k]) sd += (f - mean).cwiseAbs2();
                    sd = (sd / (fishers[k].size() - 1)).cwiseSqrt();
                }
                fmean[k] = mean;
                json s;
                s["phi"] = std::vector<double>(settings[k].phi.data(),
                                               settings[k].phi.data() + settings[k].phi.size());
                auto to_rows = [](const Eigen::MatrixXd& mread) {
                    std::vector<std::vector<double>> rows;
                    for (Eigen::Index r = 0; r < mread.rows(); ++r) {
                        std::vector<double> row;
                        for (Eigen::Index c = 0; c < mread.cols(); ++c) row.push_back(mread(r, c));
                        rows.push_back(row);
                    }
                    return rows;
                };
                s["fisher_mean"] = to_rows(mean);
                s["fisher_sd"] = to_rows(sd);
                s["fisher_analytic"] = to_rows(analytic[k]);
                freport["settings"].push_back(s);
            }

            // witness maps over the basis grid, with replication bands
            std::vector<int> loc = g1.local_indices(part);
            std::string csv = "# modewitness experiment manifest=" + manifest.hash() + "\n";
            csv += "theta,phi";
            for (std::size_t k = 0; k < n_set; ++k)
                csv += ",E_s" + std::to_string(k) + "_mean,E_s" + std::to_string(k) + "_sd";
            csv += ",E_best_mean,E_best_sd,E_best_analytic\n";
            double whom_mean = 0.0, whom_sd = 0.0;
            {
                std::vector<double> whom_per_rep(fishers[0].size(), 1e300);
                for (int gi = 0; gi < map_grid; ++gi)
                    for (int gj = 0; gj < map_grid; ++gj) {
                        Eigen::VectorXd v(2);
                        v << 2 * M_PI * gi / map_grid, 2 * M_PI * gj / map_grid;
                        std::vector<double> best(fishers[0].size(), -1e300);
                        csv += fmt(v[0]) + "," + fmt(v[1]);
                        for (std::size_t k = 0; k < n_set; ++k) {
                            double acc = 0, acc2 = 0;
                            for (std::size_t rep = 0; rep < fishers[k].size(); ++rep) {
                                HomodyneWitnessContext hctx =
                                    make_homodyne_context(gamma, {fishers[k][rep]}, g1, part);
                                double e = hctx.eval(v);
                                acc += e;
                                acc2 += e * e;
                                best[rep] = std::max(best[rep], e);
                            }
                            double mean = acc / fishers[k].size();
                            double sd = fishers[k].size() > 1
                                            ? std::sqrt(std::max(0.0, acc2 / fishers[k].size() -
                                                                          mean * mean))
                                            : 0.0;
                            csv += "," + fmt(mean) + "," + fmt(sd);
                        }
                        double bmean = 0, b2 = 0;
                        for (double b : best) {
                            bmean += b;
                            b2 += b * b;
                        }
                        bmean /= best.size();
                        double bsd = best.size() > 1
                                         ? std::sqrt(std::max(0.0, b2 / best.size() - bmean * bmean))
                                         : 0.0;
                        std::vector<Eigen::MatrixXd> fa(analytic.begin(), analytic.end());
                        HomodyneWitnessContext actx = make_homodyne_context(gamma, fa, g1, part);
                        csv += "," + fmt(bmean) + "," + fmt(bsd) + "," + fmt(actx.eval(v)) + "\n";
                        for (std::size_t rep = 0; rep < best.size(); ++rep)
                            whom_per_rep[rep] = std::min(whom_per_rep[rep], best[rep]);
                    }
                for (double wv : whom_per_rep) whom_mean += wv;
                whom_mean /= whom_per_rep.size();
                for (double wv : whom_per_rep) whom_sd += (wv - whom_mean) * (wv - whom_mean);
                whom_sd = whom_per_rep.size() > 1
                              ? std::sqrt(whom_sd / (whom_per_rep.size() - 1))
                              : 0.0;
            }
            manifest.outputs.push_back("witness_map.csv");
            atomic_write(out_path("witness_map.csv"), csv);
            freport["w_hom_grid_mean"] = whom_mean;
            freport["w_hom_grid_sd"] = whom_sd;
            freport["n_samples"] = n_samples;
            freport["reps"] = reps;
            finish(freport, "experiment.json");
            std::printf("experiment: W_hom(grid) = %.5f +- %.5f, outputs in %s\n", whom_mean,
                        whom_sd, out_dir.c_str());
        } else if (*cluster) {
            manifest.command = "cluster-opt";
            manifest.recipe_fp = recipe_fingerprint(st.recipe);
            if (st.recipe.interferometer.type != "cluster")
                throw std::runtime_error("cluster-opt: recipe has no cluster interferometer");
            ClusterSpec spec;
            spec.adjacency = st.recipe.interferometer.adjacency;
            spec.squeezing_db = st.recipe.squeezing_db;
            OptimizerConfig cfg;
            cfg.strategy = OptStrategy::Genetic;
            cfg.seed = st.recipe.interferometer.ga_seed;
            cfg.ga_restarts = 3;
            ClusterOptResult res = optimize_cluster(spec, cfg);
            json j;
            j["objective_sum_variances"] = res.objective;
            j["variances"] = res.variances;
            j["converged"] = res.converged;
            std::vector<double> ang(res.angles.data(), res.angles.data() + res.angles.size());
            j["o_free_angles"] = ang;
            manifest.params = {{"ga_seed", st.recipe.interferometer.ga_seed}};
            finish(j, "cluster.json");
            std::printf("cluster-opt: sum of nullifier variances = %.6f\n", res.objective);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
