#pragma once

#include "mw/fock.hpp"
#include "mw/generators.hpp"
#include "mw/mode_basis.hpp"
#include "mw/optimize.hpp"

namespace mw {

// Quantum Fisher information matrix over a generator set.
// Pure states: Q = 4 Cov (symmetrized). Mixed states: the spectral double
// sum over eigenpairs with p_k + p_l above `pair_floor`, evaluated on the
// full spectrum so support/kernel cross terms are kept.
Eigen::MatrixXd qfi_matrix(const PureState& state, const GeneratorSet& gens);
Eigen::MatrixXd qfi_matrix(const DensityState& state, const GeneratorSet& gens,
                           double pair_floor = 1e-10);

// Covariance matrix Gamma of the generators in the global state,
// Cov(H_i, H_j) = Re<H_i H_j> - <H_i><H_j>.
Eigen::MatrixXd cov_matrix(const PureState& state, const GeneratorSet& gens);
Eigen::MatrixXd cov_matrix(const DensityState& state, const GeneratorSet& gens);

// Gamma_Pi: covariance over the product of the partition's reduced states.
// Within-block entries equal the global covariances; cross-block entries are
// exactly zero. `gens` must contain local generators only.
Eigen::MatrixXd product_cov(const PureState& state, const GeneratorSet& gens, const Partition& p);
Eigen::MatrixXd product_cov(const DensityState& state, const GeneratorSet& gens, const Partition& p);

// E = lambda_max(Q_local - 4 Gamma_Pi); E > 0 certifies entanglement for the
// partition in the probed basis.
double witness_value(const Eigen::MatrixXd& q_local, const Eigen::MatrixXd& gamma_pi);

// Precomputed basis-probing context: Q and Gamma over the full non-local set
// in the preparation basis; per-basis evaluation applies U M U^T, restricts
// to local generators, zeroes cross-block covariances and takes lambda_max.
// No state re-simulation happens per basis.
struct WitnessContext {
    GeneratorSet gens;
    Partition partition;
    Eigen::MatrixXd q_full;      // ell x ell
    Eigen::MatrixXd gamma_full;  // ell x ell
    std::vector<int> local_idx;
    std::vector<int> local_block;  // block id per retained generator

    double eval_with_O(const Eigen::MatrixXd& O) const;
    double eval(const Eigen::VectorXd& theta_phi) const;  // Clements parameters
    // Squared Frobenius norm of Q'_loc - 4 Gamma'_Pi: a smooth surrogate whose
    // zero set coincides with E = 0 for pure states; used to seed the
    // lambda_max minimization.
    double eval_frobenius(const Eigen::VectorXd& theta_phi) const;
};

WitnessContext make_witness_context(const PureState& state, const GeneratorSet& gens,
                                    const Partition& partition);
WitnessContext make_witness_context(const DensityState& state, const GeneratorSet& gens,
                                    const Partition& partition, double pair_floor = 1e-10);
// Shares precomputed Q/Gamma across partitions of the same state.
WitnessContext make_witness_context(const Eigen::MatrixXd& q_full, const Eigen::MatrixXd& gamma_full,
                                    const GeneratorSet& gens, const Partition& partition);

double witness_in_basis(const WitnessContext& ctx, const Eigen::VectorXd& theta_phi);

struct WitnessReport {
    double w_q = 0.0;            // refined minimum
    double sampled_min = 0.0;    // best value seen before refinement
    Eigen::VectorXd argmin;      // Clements parameters (theta..., phi...)
    // When a structured seed won, the realized basis is
    // mesh(argmin) * seed_transform; empty matrix = plain mesh basis.
    Eigen::MatrixXd seed_transform;
    int order = 0;
    std::string partition;
    bool converged = false;
    bool entangled_witnessed = false;  // w_q > positivity_floor
    long long evaluations = 0;
    std::vector<OptTraceEntry> restarts;

    Eigen::MatrixXd realized_O(int modes) const;
};

inline constexpr double kWitnessPositivityFloor = 1e-3;

// Optional structured starting points for the basis search: each seed
// transform S contributes a local refinement of E(O(x) * S) over mesh
// parameters x around 0 (no Clements parameter extraction needed).
WitnessReport mode_intrinsic_witness(const WitnessContext& ctx, const OptimizerConfig& cfg,
                                     const std::vector<Eigen::MatrixXd>& seed_transforms = {});

// Minimizes the witness for several partitions of the same state. Partitions
// are processed from finest to coarsest and every coarser run is seeded with
// the finer runs' minimizers, which enforces W(coarse) <= W(fine) up to
// refinement tolerance. Partitions with equal block-size profile are
// computed once (mode relabelings are equivalent for the minimum).
std::vector<WitnessReport> witness_table(const Eigen::MatrixXd& q_full,
                                         const Eigen::MatrixXd& gamma_full, const GeneratorSet& gens,
                                         const std::vector<Partition>& partitions,
                                         const OptimizerConfig& cfg,
                                         const std::vector<Eigen::MatrixXd>& seed_transforms = {});

}  // namespace mw
