#include "mw/recipe.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mw/mode_basis.hpp"

namespace mw {

using nlohmann::json;

bool StateRecipe::lossless() const {
    for (double e : loss_eta)
        if (e != 1.0) return false;
    return true;
}

StateRecipe parse_recipe_json(const std::string& text) {
    json j = json::parse(text);
    StateRecipe r;
    r.modes = j.at("modes").get<int>();
    r.cutoff = j.value("cutoff", 0);
    if (j.contains("squeezing_db")) {
        r.squeezing_db = j.at("squeezing_db").get<std::vector<double>>();
    } else if (j.contains("squeezing_r")) {
        for (double v : j.at("squeezing_r").get<std::vector<double>>())
            r.squeezing_db.push_back(squeezing_r_to_db(v));
    } else {
        r.squeezing_db.assign(r.modes, 0.0);
    }
    if (static_cast<int>(r.squeezing_db.size()) != r.modes)
        throw std::invalid_argument("recipe: squeezing entry count mismatch");

    if (j.contains("interferometer")) {
        const json& itf = j.at("interferometer");
        r.interferometer.type = itf.value("type", "identity");
        if (r.interferometer.type == "clements") {
            r.interferometer.theta = itf.at("theta").get<std::vector<double>>();
            r.interferometer.phi = itf.at("phi").get<std::vector<double>>();
        } else if (r.interferometer.type == "cluster") {
            if (itf.at("graph").is_string()) {
                r.interferometer.adjacency = named_adjacency(itf.at("graph").get<std::string>());
            } else {
                auto rows = itf.at("graph").get<std::vector<std::vector<double>>>();
                Eigen::MatrixXd v(rows.size(), rows.size());
                for (std::size_t a = 0; a < rows.size(); ++a)
                    for (std::size_t b = 0; b < rows.size(); ++b) v(a, b) = rows[a][b];
                r.interferometer.adjacency = v;
            }
            if (itf.contains("o_free") && itf.at("o_free").is_object()) {
                r.interferometer.o_free_mode = "angles";
                auto ang = itf.at("o_free").at("angles").get<std::vector<double>>();
                r.interferometer.o_free_angles =
                    Eigen::Map<const Eigen::VectorXd>(ang.data(), ang.size());
            } else {
                r.interferometer.o_free_mode = itf.value("o_free", "optimized");
            }
            r.interferometer.ga_seed = itf.value("ga_seed", 1);
        } else if (r.interferometer.type != "identity") {
            throw std::invalid_argument("recipe: unknown interferometer type");
        }
    }

    if (j.contains("subtractions")) {
        for (const json& s : j.at("subtractions")) {
            SubtractionSpec spec;
            if (s.contains("angle")) spec.angle = s.at("angle").get<double>();
            if (s.contains("mode")) spec.mode = s.at("mode").get<int>() - 1;
            if (s.contains("coeffs")) spec.coeffs = s.at("coeffs").get<std::vector<double>>();
            if (!spec.angle && !spec.mode && !spec.coeffs)
                throw std::invalid_argument("recipe: subtraction needs angle, mode or coeffs");
            r.subtractions.push_back(spec);
        }
    }

    if (j.contains("loss_eta")) r.loss_eta = j.at("loss_eta").get<std::vector<double>>();
    if (!r.loss_eta.empty() && static_cast<int>(r.loss_eta.size()) != r.modes)
        throw std::invalid_argument("recipe: loss_eta entry count mismatch");
    r.leak_threshold = j.value("leak_threshold", 1e-8);
    r.seed = j.value("seed", 0);
    return r;
}

StateRecipe load_recipe(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open recipe: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_recipe_json(ss.str());
}

std::string recipe_fingerprint(const StateRecipe& r) {
    std::string blob = std::to_string(r.modes) + "/" + std::to_string(r.cutoff);
    for (double v : r.squeezing_db) blob += "," + format_double(v);
    blob += "/" + r.interferometer.type;
    for (double v : r.interferometer.theta) blob += "," + format_double(v);
    for (double v : r.interferometer.phi) blob += "," + format_double(v);
    for (const auto& s : r.subtractions) {
        blob += "/s";
        if (s.angle) blob += "a" + format_double(*s.angle);
        if (s.mode) blob += "m" + std::to_string(*s.mode);
        if (s.coeffs)
            for (double c : *s.coeffs) blob += "c" + format_double(c);
    }
    for (double v : r.loss_eta) blob += "/e" + format_double(v);
    return hex64(fnv1a64(blob));
}

BuiltState build_state(const StateRecipe& recipe, int cutoff_override,
                       const std::optional<std::vector<double>>& loss_override) {
    if (recipe.modes < 1) throw std::invalid_argument("recipe: modes must be >= 1");
    std::vector<double> r_nat(recipe.modes);
    double r_max = 0.0;
    for (int k = 0; k < recipe.modes; ++k) {
        r_nat[k] = squeezing_db_to_r(recipe.squeezing_db[k]);
        r_max = std::max(r_max, std::abs(r_nat[k]));
    }
    int cutoff = cutoff_override > 0 ? cutoff_override : recipe.cutoff;
    if (cutoff == 0) cutoff = auto_cutoff_for_squeezing(r_max, recipe.leak_threshold);
    cutoff = std::max(cutoff, 2);

    BuiltState out;
    out.cutoff = cutoff;
    PureState state = squeezed_vacuum(r_nat, cutoff, recipe.leak_threshold);

    const InterferometerSpec& itf = recipe.interferometer;
    if (itf.type == "clements") {
        const int count = basis_parameter_count(recipe.modes);
        if (static_cast<int>(itf.theta.size()) != count || static_cast<int>(itf.phi.size()) != count)
            throw std::invalid_argument("recipe: clements parameter count mismatch");
        std::vector<double> flat = itf.theta;
        flat.insert(flat.end(), itf.phi.begin(), itf.phi.end());
        BasisChange bc = clements_orthogonal(flat, recipe.modes);
        state = apply_passive_unitary(state, mode_unitary_from_quadrature(bc.O));
    } else if (itf.type == "cluster") {
        ClusterSpec spec;
        spec.adjacency = itf.adjacency;
        spec.squeezing_db = recipe.squeezing_db;
        spec.subtract_node = 0;
        Eigen::MatrixXd o_free;
        if (itf.o_free_mode == "angles") {
            o_free = givens_orthogonal(itf.o_free_angles, recipe.modes);
        } else if (itf.o_free_mode == "identity") {
            o_free = Eigen::MatrixXd::Identity(recipe.modes, recipe.modes);
        } else {
            OptimizerConfig cfg;
            cfg.strategy = OptStrategy::Genetic;
            cfg.seed = itf.ga_seed;
            ClusterOptResult opt = optimize_cluster(spec, cfg);
            out.cluster_opt = opt;
            o_free = opt.o_free;
        }
        state = apply_passive_unitary(state, cluster_unitary(itf.adjacency, o_free));
    }

    for (const auto& s : recipe.subtractions) {
        Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(recipe.modes);
        if (s.angle) {
            if (recipe.modes != 2)
                throw std::invalid_argument("recipe: angle subtraction is two-mode only");
            coeffs[0] = std::cos(*s.angle);
            coeffs[1] = std::sin(*s.angle);
        } else if (s.mode) {
            if (*s.mode < 0 || *s.mode >= recipe.modes)
                throw std::invalid_argument("recipe: subtraction mode out of range");
            coeffs[*s.mode] = 1.0;
        } else {
            if (static_cast<int>(s.coeffs->size()) != recipe.modes)
                throw std::invalid_argument("recipe: subtraction coefficient count mismatch");
            for (int k = 0; k < recipe.modes; ++k) coeffs[k] = (*s.coeffs)[k];
        }
        double w = 0.0;
        state = subtract_photon(state, coeffs, &w);
        out.subtraction_weights.push_back(w);
    }

    out.pure = state;
    std::vector<double> eta = loss_override ? *loss_override : recipe.loss_eta;
    bool lossy = false;
    for (double e : eta) {
        if (e < 0.0 || e > 1.0) throw std::invalid_argument("recipe: eta outside [0,1]");
        if (e != 1.0) lossy = true;
    }
    if (lossy) out.lossy = apply_loss(state, eta);
    return out;
}

}  // namespace mw
