#pragma once

#include "mw/fock.hpp"
#include "mw/optimize.hpp"

namespace mw {

// Graph-state specification: symmetric 0/1 adjacency with zero diagonal,
// per-mode squeezing in dB (signed; negative = momentum squeezed) and the
// node carrying the photon subtraction.
struct ClusterSpec {
    Eigen::MatrixXd adjacency;
    std::vector<double> squeezing_db;
    int subtract_node = 0;

    int modes() const { return static_cast<int>(adjacency.rows()); }
    void validate() const;
};

// Named graphs: "chain3", "graph4_paper", "graph5_paper". The 4- and 5-mode
// edge sets are transcribed from a pictorial source; the chosen reading is a
// linear chain with the subtraction on node 1 (see fixtures in recipes/).
Eigen::MatrixXd named_adjacency(const std::string& name);

// U_V = (1 + iV)(V^2 + 1)^(-1/2) O_free with O_free real orthogonal.
Eigen::MatrixXcd cluster_unitary(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& o_free,
                                 double orth_tol = 1e-10);

// Real orthogonal (det +1) from m(m-1)/2 Givens angles.
Eigen::MatrixXd givens_orthogonal(const Eigen::VectorXd& angles, int modes);

// Nullifier delta_i = p_i - sum_k V_ik q_k; variances evaluated on the state.
std::vector<double> nullifier_variances(const PureState& state, const Eigen::MatrixXd& adjacency);

// Same quantity from the 2m x 2m quadrature covariance of the Gaussian
// pre-subtraction state (exact for Gaussian inputs); used as the optimizer
// objective so candidate evaluation never rebuilds a Fock state.
std::vector<double> nullifier_variances_gaussian(const Eigen::MatrixXd& adjacency,
                                                 const std::vector<double>& r_natural,
                                                 const Eigen::MatrixXd& o_free);

struct ClusterOptResult {
    Eigen::MatrixXd o_free;
    Eigen::VectorXd angles;
    std::vector<double> variances;
    double objective = 0.0;  // sum of nullifier variances
    double decoupled_input_weight = 0.0;  // min_k |c_k|^2 of the subtraction row
    bool converged = false;
};

// Optimizes O_free by genetic search on the Givens angles (objective: sum of
// nullifier variances), with a simplex polish on the champion. The optimum is
// typically degenerate (rotations inside eigenspaces of V^2+1 between equal-
// weight directions leave the sum invariant); the tie-break stage walks along
// the flat valley to minimize the smallest input component of the subtraction
// row of U_V, which decouples one input mode from the photon subtraction when
// it reaches zero.
ClusterOptResult optimize_cluster(const ClusterSpec& spec, const OptimizerConfig& cfg,
                                  bool tie_break_decoupling = false);

// Gaussian cluster state in Fock space (before subtraction).
PureState build_cluster_state(const ClusterSpec& spec, const Eigen::MatrixXd& o_free, int cutoff,
                              double leak_threshold);

}  // namespace mw
