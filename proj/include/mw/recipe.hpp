#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mw/cluster.hpp"
#include "mw/fock.hpp"

namespace mw {

// State recipe, serialized as JSON:
// {
//   "modes": 2, "cutoff": 12,            // cutoff 0 = auto from squeezing
//   "squeezing_db": [...] | "squeezing_r": [...],
//   "interferometer": {"type": "identity"}
//                   | {"type": "clements", "theta": [...], "phi": [...]}
//                   | {"type": "cluster", "graph": "chain3" | adjacency rows,
//                      "o_free": "optimized" | {"angles": [...]}, "ga_seed": 7}
//   "subtractions": [{"angle": 0.785} | {"mode": 1} | {"coeffs": [..]}],
//   "loss_eta": [...],                    // omitted or all 1 = pure path
//   "leak_threshold": 1e-8,
//   "seed": 42
// }
struct SubtractionSpec {
    std::optional<double> angle;          // two-mode (cos t, sin t)
    std::optional<int> mode;              // 1-based node in JSON, stored 0-based
    std::optional<std::vector<double>> coeffs;
};

struct InterferometerSpec {
    std::string type = "identity";  // identity | clements | cluster
    std::vector<double> theta, phi;
    Eigen::MatrixXd adjacency;      // cluster
    std::string o_free_mode = "optimized";
    Eigen::VectorXd o_free_angles;
    std::uint64_t ga_seed = 1;
};

struct StateRecipe {
    int modes = 0;
    int cutoff = 0;  // 0 = auto-select from squeezing
    std::vector<double> squeezing_db;
    InterferometerSpec interferometer;
    std::vector<SubtractionSpec> subtractions;
    std::vector<double> loss_eta;  // empty = no loss
    double leak_threshold = 1e-8;
    std::uint64_t seed = 0;

    bool lossless() const;
};

StateRecipe parse_recipe_json(const std::string& json_text);
StateRecipe load_recipe(const std::string& path);
std::string recipe_fingerprint(const StateRecipe& r);

struct BuiltState {
    PureState pure;                       // pre-loss state
    std::optional<DensityState> lossy;    // present when loss applied
    int cutoff = 0;
    std::vector<double> subtraction_weights;
    std::optional<ClusterOptResult> cluster_opt;

    bool is_mixed() const { return lossy.has_value(); }
};

// Builds the state: squeezed vacua -> interferometer -> subtractions -> loss.
// `cutoff_override` (>0) and `loss_override` replace the recipe's values.
BuiltState build_state(const StateRecipe& recipe, int cutoff_override = 0,
                       const std::optional<std::vector<double>>& loss_override = std::nullopt);

}  // namespace mw
