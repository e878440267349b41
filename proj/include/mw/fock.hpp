#pragma once

#include <vector>

#include "mw/common.hpp"
#include "mw/generators.hpp"

namespace mw {

// Multimode pure state on a truncated Fock space, (cutoff+1) levels per mode.
// Amplitudes are stored row-major with mode 0 as the slowest index.
struct PureState {
    int modes = 0;
    int cutoff = 0;
    Eigen::VectorXcd amp;

    int levels() const { return cutoff + 1; }
    Eigen::Index dim() const { return amp.size(); }
    double norm_sq() const { return amp.squaredNorm(); }
    // Probability that mode `k` sits in its top Fock level; the max over
    // modes is the truncation-leakage indicator carried by every builder.
    double top_layer_probability(int mode) const;
    double max_top_layer_probability() const;
};

struct DensityState {
    int modes = 0;
    int cutoff = 0;
    Eigen::MatrixXcd rho;

    int levels() const { return cutoff + 1; }
    Eigen::Index dim() const { return rho.rows(); }
    double trace_real() const { return rho.trace().real(); }
    double top_layer_probability(int mode) const;
    double max_top_layer_probability() const;
};

// Memory guard for density-matrix paths (see module docs).
inline constexpr int kMaxDensityModes = 3;
inline constexpr int kMaxDensityCutoff = 10;
// Highest supported total monomial order (products of two order-3 generators).
inline constexpr int kMaxMomentOrder = 2 * kMaxGeneratorOrder;

PureState vacuum_state(int modes, int cutoff);
PureState fock_basis_state(int modes, int cutoff, const std::vector<int>& occupation);

// Smallest cutoff with the analytic single-mode squeezed-vacuum top-layer
// probability below `leak_threshold` for squeezing |r|.
int auto_cutoff_for_squeezing(double r_abs_max, double leak_threshold = 1e-8, int cap = 64);

// Tensor product of single-mode squeezed vacua, S(r) = exp((r/2)(a^2 - a^dag^2)).
// r > 0 squeezes q (Var(q) = e^{-2r}), r < 0 squeezes p.
PureState squeezed_vacuum(const std::vector<double>& r, int cutoff, double leak_threshold = 1e-8);

// Single-mode matrices on the truncated space.
Eigen::MatrixXcd annihilation_matrix(int levels);
Eigen::MatrixXcd quadrature_q_matrix(int levels);
Eigen::MatrixXcd quadrature_p_matrix(int levels);
Eigen::MatrixXcd squeezer_matrix(double r, int levels);

// Weyl-ordered S(q^a p^b) on one mode, computed by the McCoy expansion
// (1/2^a) sum_r C(a,r) q^r p^b q^(a-r).
Eigen::MatrixXcd single_mode_weyl(int q_exp, int p_exp, int levels);

// Applies a (levels x levels) matrix to one mode of the state tensor.
void apply_single_mode_op(PureState& state, int mode, const Eigen::MatrixXcd& op);
// Applies a (levels^2 x levels^2) matrix to adjacent modes (mode, mode+1).
void apply_two_mode_op(PureState& state, int mode, const Eigen::MatrixXcd& op);

// Passive interferometer u acting on mode operators, a -> u a in the
// Heisenberg picture (i.e. U^dag a_k U = sum_j u_kj a_j). Decomposed into
// adjacent-pair Givens blocks and per-mode phases so large mode counts
// never require a full-dimension matrix exponential.
PureState apply_passive_unitary(const PureState& state, const Eigen::MatrixXcd& u,
                                double unitarity_tol = 1e-10);
// Fock-space matrix of a passive 2x2 block g on two modes (levels each).
Eigen::MatrixXcd two_mode_passive_fock(const Eigen::Matrix2cd& g, int levels);

// Photon subtraction: state -> sum_k coeffs_k a_k |psi>, renormalized.
// Throws when the pre-normalization norm^2 falls below `norm_floor`
// (subtraction probability ~ 0). The pre-normalization norm^2 is reported
// through `weight_out` when non-null.
PureState subtract_photon(const PureState& state, const Eigen::VectorXcd& coeffs,
                          double* weight_out = nullptr, double norm_floor = 1e-12);
// Two-mode convenience form, coefficients (cos theta, sin theta).
PureState subtract_photon(const PureState& state, double theta, double* weight_out = nullptr,
                          double norm_floor = 1e-12);

// Per-mode amplitude-damping (loss) channel with efficiency eta in [0,1],
// Kraus elements <n-k|K_k|n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k).
DensityState apply_loss(const PureState& state, const std::vector<double>& eta);
DensityState apply_loss(const DensityState& state, const std::vector<double>& eta);
DensityState density_from_pure(const PureState& state);

// <S(q1^k1 ... pm^k2m)> for pure or mixed states. Symmetrization factorizes
// across modes since different-mode quadratures commute.
double expectation(const PureState& state, const Generator& mono);
double expectation(const DensityState& state, const Generator& mono);

// H|psi> for a symmetrized monomial H; building block for covariance Grams.
PureState apply_generator(const PureState& state, const Generator& mono);

struct EigenPair {
    double p = 0.0;
    Eigen::VectorXcd vec;
};

// Eigenpairs of rho with p >= p_floor, sorted descending.
std::vector<EigenPair> spectral_decompose(const DensityState& rho, double p_floor = 1e-12);

// Full spectrum (all eigenpairs, negatives clipped to zero), descending.
// Needed by the mixed-state QFI where support/kernel cross terms matter.
std::vector<EigenPair> full_spectrum(const DensityState& rho);

// Hermitian matrix of sum_i c_i H_i over a generator subset on the truncated
// space; used by the homodyne order-2 simulation path (exp(-i kappa H)).
Eigen::MatrixXcd generator_matrix(const Generator& mono, int modes, int levels);

}  // namespace mw
