#pragma once

#include "mw/fock.hpp"
#include "mw/generators.hpp"
#include "mw/optimize.hpp"
#include "mw/witness.hpp"

namespace mw {

// Joint homodyne measurement: mode i measures xi_phi_i = cos(phi_i) q_i +
// sin(phi_i) p_i on a uniform grid of `bins` cells over [grid_min, grid_max].
struct MeasurementSetting {
    Eigen::VectorXd phi;
    double grid_min = -8.0;
    double grid_max = 8.0;
    int bins = 256;

    int modes() const { return static_cast<int>(phi.size()); }
    double cell_width() const { return (grid_max - grid_min) / bins; }
    double cell_center(int i) const { return grid_min + (i + 0.5) * cell_width(); }
    void validate() const;
};

MeasurementSetting setting_all(int modes, double angle, double grid_min = -8.0,
                               double grid_max = 8.0, int bins = 256);

// Discrete probability over grid cells (bins^modes, mode 0 slowest).
struct GridPdf {
    MeasurementSetting setting;
    int modes = 0;
    Eigen::VectorXd p;
    double raw_mass_defect = 0.0;
};

// Pure-or-mixed state as a weighted list of pure components; density states
// are spectrally decomposed once so downstream loops reuse the eigenbasis.
struct StateEnsemble {
    int modes = 0;
    int cutoff = 0;
    std::vector<double> weights;
    std::vector<PureState> components;

    static StateEnsemble from(const PureState& s);
    static StateEnsemble from(const DensityState& s, double p_floor = 1e-12);
};

// Marginal over the measured quadratures, from the rotated-quadrature
// Hermite-function expansion of the Fock amplitudes. Grid is widened (factor
// 1.5, up to 4 times) whenever the raw mass defect exceeds defect_threshold.
GridPdf marginal_distribution(const StateEnsemble& state, const MeasurementSetting& setting,
                              double defect_threshold = 1e-6, bool allow_widen = true);
GridPdf marginal_distribution(const PureState& state, const MeasurementSetting& setting);
GridPdf marginal_distribution(const DensityState& state, const MeasurementSetting& setting);

enum class ParamPath { GridShift, Simulate };

// Measured-axis shift rates (d xi_phi_i / d kappa) of a displacement
// generator; the pdf moves by kappa * rate along each measured axis.
Eigen::VectorXd displacement_rates(const Generator& g, const MeasurementSetting& setting);

// Distribution after exp(-i kappa H) for a generator of order <= 2.
// Order 1 defaults to the post-processing grid-shift path, order 2 to the
// simulation path (symplectic flow applied to the state).
GridPdf parametrized_distribution(const StateEnsemble& state, const Generator& g, double kappa,
                                  const MeasurementSetting& setting,
                                  ParamPath path = ParamPath::GridShift);

// Multinomial sample over grid cells; reproducible per seed.
struct HomodyneDataset {
    MeasurementSetting setting;
    int modes = 0;
    Eigen::VectorXd counts;
    long long n_samples = 0;
    std::uint64_t seed = 0;
};

HomodyneDataset sample(const GridPdf& pdf, long long n, std::uint64_t seed);

// Normalized squared Hellinger distance (1 - Bhattacharyya affinity);
// small-kappa expansion d_H^2 = kappa^T (F/8) kappa.
double hellinger_sq(const Eigen::VectorXd& freq_a, const Eigen::VectorXd& freq_b);

struct FisherResult {
    Eigen::MatrixXd mean;     // indexed like the generator set
    Eigen::MatrixXd std_err;  // zero when no resampling was requested
    std::string method;
};

// Classical Fisher matrix of the kappa-encoding, from central finite
// differences of the exact cell probabilities (one Richardson step).
// Serves as the oracle for the Hellinger estimator.
Eigen::MatrixXd analytic_fisher(const StateEnsemble& state, const GeneratorSet& gens,
                                const MeasurementSetting& setting, double fd_step = 1e-3);

// Hellinger-distance estimator on a sampled histogram. Displacement
// parameters are applied as integer-cell shifts; per direction the distances
// at |shift| in {1,2,3} cells are fitted to c0 + a k^2 + b k^4 (the intercept
// absorbs the sampling bias of the plug-in Hellinger distance), off-diagonal
// entries via e_i +- e_j polarization. Requires order-1 generators.
// shift_scale widens the probed kappa steps (cells {s, 2s}); 1 suits fine
// grids, 2 trades a little quartic bias for less shot noise.
FisherResult hellinger_fisher(const HomodyneDataset& data, const GeneratorSet& gens,
                              int bootstrap_reps = 0, std::uint64_t bootstrap_seed = 1,
                              int shift_scale = 1);

// Measurement-setting witness: E_hom(phi, theta | theta0) =
// lambda_max(U F U^T - 4 (U Gamma U^T)_Pi), maximized over the provided
// settings; W_hom minimizes that over the basis parameters.
struct HomodyneWitnessContext {
    GeneratorSet gens;
    Partition partition;
    Eigen::MatrixXd gamma_full;
    std::vector<Eigen::MatrixXd> fishers;  // one per setting, full-set indexed
    std::vector<int> local_idx;
    std::vector<int> local_block;

    double eval_with_O(const Eigen::MatrixXd& O) const;
    double eval(const Eigen::VectorXd& theta_phi) const;
};

HomodyneWitnessContext make_homodyne_context(const Eigen::MatrixXd& gamma_full,
                                             std::vector<Eigen::MatrixXd> fishers,
                                             const GeneratorSet& gens, const Partition& partition);

struct HomodyneWitnessReport {
    double w_hom = 0.0;
    Eigen::VectorXd argmin;
    bool converged = false;
};

HomodyneWitnessReport homodyne_witness(const HomodyneWitnessContext& ctx, const OptimizerConfig& cfg);

// Embeds a Fisher matrix computed on a generator subset into full-set
// indexing (zero elsewhere).
Eigen::MatrixXd embed_fisher(const Eigen::MatrixXd& f_subset, const std::vector<int>& subset_idx,
                             std::size_t full_size);

}  // namespace mw
