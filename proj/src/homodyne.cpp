#include "mw/homodyne.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mw/mode_basis.hpp"

namespace mw {

void MeasurementSetting::validate() const {
    if (modes() < 1 || modes() > 2)
        throw std::invalid_argument("measurement setting: 1 or 2 modes supported");
    if (bins < 64) throw std::invalid_argument("measurement setting: bins must be >= 64");
    if (grid_max <= grid_min) throw std::invalid_argument("measurement setting: empty grid");
}

MeasurementSetting setting_all(int modes, double angle, double grid_min, double grid_max, int bins) {
    MeasurementSetting s;
    s.phi = Eigen::VectorXd::Constant(modes, angle);
    s.grid_min = grid_min;
    s.grid_max = grid_max;
    s.bins = bins;
    return s;
}

StateEnsemble StateEnsemble::from(const PureState& s) {
    StateEnsemble e;
    e.modes = s.modes;
    e.cutoff = s.cutoff;
    e.weights = {1.0};
    e.components = {s};
    return e;
}

StateEnsemble StateEnsemble::from(const DensityState& s, double p_floor) {
    StateEnsemble e;
    e.modes = s.modes;
    e.cutoff = s.cutoff;
    for (auto& pair : spectral_decompose(s, p_floor)) {
        e.weights.push_back(pair.p);
        PureState c;
        c.modes = s.modes;
        c.cutoff = s.cutoff;
        c.amp = pair.vec;
        e.components.push_back(std::move(c));
    }
    return e;
}

namespace {

// Quadrature eigenfunctions under Var_vac = 1: psi_n(x) = (2pi)^(-1/4)
// h_n(x/sqrt(2)) e^(-x^2/4) with the normalized Hermite recurrence
// h_{n+1} = sqrt(2/(n+1)) y h_n - sqrt(n/(n+1)) h_{n-1}.
Eigen::MatrixXd hermite_table(const Eigen::VectorXd& x, int levels) {
    Eigen::MatrixXd out(x.size(), levels);
    for (Eigen::Index g = 0; g < x.size(); ++g) {
        const double y = x[g] / std::sqrt(2.0);
        const double gauss = std::pow(2.0 * M_PI, -0.25) * std::exp(-x[g] * x[g] / 4.0);
        double hm1 = 0.0, h = 1.0;
        for (int n = 0; n < levels; ++n) {
            out(g, n) = gauss * h;
            double hp1 = std::sqrt(2.0 / (n + 1)) * y * h - std::sqrt(double(n) / (n + 1)) * hm1;
            hm1 = h;
            h = hp1;
        }
    }
    return out;
}

// Per-mode sampling matrix Psi[g, n] = e^{-i n phi} psi_n(x_g).
Eigen::MatrixXcd mode_sampling_matrix(const Eigen::VectorXd& x, double phi, int levels) {
    Eigen::MatrixXd h = hermite_table(x, levels);
    Eigen::MatrixXcd out(x.size(), levels);
    for (int n = 0; n < levels; ++n) out.col(n) = h.col(n) * std::exp(cxd(0, -phi * n));
    return out;
}

// |amplitude|^2 on the grid for one pure component, with optional per-axis
// shift of the evaluation points (x - delta).
Eigen::VectorXd component_density(const PureState& psi, const MeasurementSetting& s,
                                  const Eigen::VectorXd& delta) {
    const int d = psi.levels();
    const int bins = s.bins;
    Eigen::VectorXd x(bins);
    for (int i = 0; i < bins; ++i) x[i] = s.cell_center(i);
    if (psi.modes == 1) {
        Eigen::MatrixXcd m0 = mode_sampling_matrix(x.array() - delta[0], s.phi[0], d);
        Eigen::VectorXcd a = m0 * psi.amp;
        return a.cwiseAbs2();
    }
    Eigen::MatrixXcd m0 = mode_sampling_matrix(x.array() - delta[0], s.phi[0], d);
    Eigen::MatrixXcd m1 = mode_sampling_matrix(x.array() - delta[1], s.phi[1], d);
    Eigen::Map<const Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> amp(
        psi.amp.data(), d, d);
    Eigen::MatrixXcd a = m0 * amp * m1.transpose();  // bins x bins, mode0 rows
    Eigen::VectorXd out(static_cast<Eigen::Index>(bins) * bins);
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) out[static_cast<Eigen::Index>(i) * bins + j] = std::norm(a(i, j));
    return out;
}

GridPdf marginal_impl(const StateEnsemble& st, const MeasurementSetting& setting,
                      const Eigen::VectorXd& delta, double defect_threshold, bool allow_widen) {
    MeasurementSetting s = setting;
    s.validate();
    for (int attempt = 0;; ++attempt) {
        const double cell = std::pow(s.cell_width(), st.modes);
        Eigen::VectorXd p = Eigen::VectorXd::Zero(
            st.modes == 1 ? s.bins : static_cast<Eigen::Index>(s.bins) * s.bins);
        for (std::size_t k = 0; k < st.components.size(); ++k)
            p += st.weights[k] * component_density(st.components[k], s, delta);
        p *= cell;
        double mass = p.sum();
        double defect = 1.0 - mass;
        if (defect > defect_threshold && allow_widen && attempt < 6) {
            double span = (s.grid_max - s.grid_min) * 0.25;  // widen 1.5x, keep center
            s.grid_min -= span;
            s.grid_max += span;
            continue;
        }
        if (defect > defect_threshold && !allow_widen)
            throw std::runtime_error("marginal_distribution: grid too small (mass defect " +
                                     std::to_string(defect) + ")");
        GridPdf out;
        out.setting = s;
        out.modes = st.modes;
        out.raw_mass_defect = defect;
        out.p = p / mass;
        return out;
    }
}

}  // namespace

GridPdf marginal_distribution(const StateEnsemble& state, const MeasurementSetting& setting,
                              double defect_threshold, bool allow_widen) {
    if (setting.modes() != state.modes)
        throw std::invalid_argument("marginal: setting mode count mismatch");
    return marginal_impl(state, setting, Eigen::VectorXd::Zero(state.modes), defect_threshold,
                         allow_widen);
}

GridPdf marginal_distribution(const PureState& state, const MeasurementSetting& setting) {
    return marginal_distribution(StateEnsemble::from(state), setting);
}

GridPdf marginal_distribution(const DensityState& state, const MeasurementSetting& setting) {
    return marginal_distribution(StateEnsemble::from(state), setting);
}

Eigen::VectorXd displacement_rates(const Generator& g, const MeasurementSetting& setting) {
    if (g.order() != 1) throw std::invalid_argument("displacement rates: order-1 generator required");
    const int m = g.modes();
    // xi_b shifts at rate -2 (c^T Omega)_b under exp(-i kappa c.xi), with
    // [xi_a, xi_b] = 2i Omega_ab. For c = e_{q_j}: p_j moves at -2; for
    // c = e_{p_j}: q_j moves at +2.
    Eigen::VectorXd s_q = Eigen::VectorXd::Zero(m), s_p = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
        if (g.q_exp(j)) s_p[j] = -2.0;
        if (g.p_exp(j)) s_q[j] = 2.0;
    }
    Eigen::VectorXd rates(setting.modes());
    for (int i = 0; i < setting.modes(); ++i)
        rates[i] = std::cos(setting.phi[i]) * s_q[i] + std::sin(setting.phi[i]) * s_p[i];
    return rates;
}

GridPdf parametrized_distribution(const StateEnsemble& state, const Generator& g, double kappa,
                                  const MeasurementSetting& setting, ParamPath path) {
    if (g.order() > 2) throw std::invalid_argument("parametrized distribution: generator order > 2");
    if (g.modes() != state.modes)
        throw std::invalid_argument("parametrized distribution: mode count mismatch");
    if (g.order() == 1 && path == ParamPath::GridShift) {
        Eigen::VectorXd delta = kappa * displacement_rates(g, setting);
        return marginal_impl(state, setting, delta, 1e-6, false);
    }
    // Simulation path: apply exp(-i kappa H) to every component.
    const int d = state.cutoff + 1;
    Eigen::MatrixXcd h = generator_matrix(g, state.modes, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd ph(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < ph.size(); ++i)
        ph[i] = std::exp(cxd(0, -kappa * es.eigenvalues()[i]));
    Eigen::MatrixXcd u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    StateEnsemble moved = state;
    for (auto& c : moved.components) c.amp = u * c.amp;
    return marginal_impl(moved, setting, Eigen::VectorXd::Zero(state.modes), 1e-6, false);
}

HomodyneDataset sample(const GridPdf& pdf, long long n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("sample: n must be > 0");
    HomodyneDataset ds;
    ds.setting = pdf.setting;
    ds.modes = pdf.modes;
    ds.n_samples = n;
    ds.seed = seed;
    ds.counts = Eigen::VectorXd::Zero(pdf.p.size());
    std::mt19937_64 rng(seed);
    long long remaining = n;
    double mass_left = 1.0;
    for (Eigen::Index c = 0; c < pdf.p.size() && remaining > 0; ++c) {
        double pc = pdf.p[c];
        if (pc <= 0.0) continue;
        double q = std::min(1.0, pc / mass_left);
        long long k;
        if (q >= 1.0) {
            k = remaining;
        } else {
            std::binomial_distribution<long long> bin(remaining, q);
            k = bin(rng);
        }
        ds.counts[c] = static_cast<double>(k);
        remaining -= k;
        mass_left -= pc;
        if (mass_left <= 0) break;
    }
    if (remaining > 0) ds.counts[pdf.p.size() - 1] += static_cast<double>(remaining);
    return ds;
}

double hellinger_sq(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hellinger: size mismatch");
    double na = a.sum(), nb = b.sum();
    if (na <= 0 || nb <= 0) throw std::invalid_argument("hellinger: empty distribution");
    double affinity = (a / na).cwiseMax(0.0).cwiseSqrt().dot((b / nb).cwiseMax(0.0).cwiseSqrt());
    return std::max(0.0, 1.0 - affinity);
}


namespace {

// Histogram shifted by an integer number of cells per axis; cells shifted in
// from outside are zero, mass shifted out is dropped (edge mass ~ 0 for
// grids covering >= 6 sigma).
Eigen::VectorXd shift_histogram(const Eigen::VectorXd& h, int modes, int bins,
                                const std::vector<int>& shift) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(h.size());
    if (modes == 1) {
        for (int i = 0; i < bins; ++i) {
            int src = i - shift[0];
            if (src >= 0 && src < bins) out[i] = h[src];
        }
        return out;
    }
    for (int i = 0; i < bins; ++i) {
        int si = i - shift[0];
        if (si < 0 || si >= bins) continue;
        for (int j = 0; j < bins; ++j) {
            int sj = j - shift[1];
            if (sj < 0 || sj >= bins) continue;
            out[static_cast<Eigen::Index>(i) * bins + j] = h[static_cast<Eigen::Index>(si) * bins + sj];
        }
    }
    return out;
}

// Hellinger distance between two independent histograms with the first-order
// multinomial correction of the affinity, sqrt(pa pb) ~ sqrt(fa fb) (1 +
// (1-fa)/(8 na fa) + (1-fb)/(8 nb fb)). Valid because the halves carry
// independent noise; the remaining empty-cell residue is removed by the
// zero-shift subtraction in the curvature estimator.
double hellinger_sq_split(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double na = a.sum(), nb = b.sum();
    if (na <= 0 || nb <= 0) throw std::invalid_argument("hellinger: empty distribution");
    double affinity = 0.0;
    for (Eigen::Index c = 0; c < a.size(); ++c) {
        if (a[c] <= 0.0 || b[c] <= 0.0) continue;
        double fa = a[c] / na, fb = b[c] / nb;
        double corr = (1.0 - fa) / (8.0 * a[c]) + (1.0 - fb) / (8.0 * b[c]);
        affinity += std::sqrt(fa * fb) * (1.0 + corr);
    }
    return 1.0 - affinity;
}

// Deterministic half/half split of a histogram (binomial thinning). The two
// halves are independent samples of the same distribution, so the plug-in
// Hellinger distance between them carries the same additive noise offset at
// every shift, including shift zero, where it can be measured and removed.
void split_histogram(const Eigen::VectorXd& counts, std::uint64_t seed, Eigen::VectorXd& half_a,
                     Eigen::VectorXd& half_b) {
    half_a = Eigen::VectorXd::Zero(counts.size());
    half_b = Eigen::VectorXd::Zero(counts.size());
    std::mt19937_64 rng(seed);
    for (Eigen::Index c = 0; c < counts.size(); ++c) {
        double n = counts[c];
        if (n <= 0) continue;
        if (n > 4e6) {  // noise on halves is irrelevant at this size
            half_a[c] = n / 2;
            half_b[c] = n / 2;
            continue;
        }
        std::binomial_distribution<long long> bin(static_cast<long long>(n), 0.5);
        double a = static_cast<double>(bin(rng));
        half_a[c] = a;
        half_b[c] = n - a;
    }
}

// Quadratic coefficient a of d_H^2(kappa) ~ a kappa^2 along one displacement
// direction (sum of generator rate vectors), via integer-cell shifts of one
// half against the other. The zero-shift distance is subtracted to remove
// the plug-in offset. Extrapolation to kappa -> 0 is linear in |kappa|
// (2 g(s) - g(2s)): marginals of photon-subtracted states have nodes, which
// contribute |kappa|^3 terms to the Hellinger distance, so |kappa| is the
// correct next order after kappa^2.
double direction_curvature(const Eigen::VectorXd& half_a, const Eigen::VectorXd& half_b,
                           const MeasurementSetting& s, int modes, const Eigen::VectorXd& rates,
                           int s_lo) {
    double scale = 0.0;
    for (int i = 0; i < rates.size(); ++i) {
        double r = std::abs(rates[i]);
        if (r < 1e-12) continue;
        if (scale == 0.0) scale = r;
        else if (std::abs(r - scale) > 1e-9 * scale)
            throw std::invalid_argument("hellinger_fisher: unequal shift rates in one direction");
    }
    if (scale == 0.0) return 0.0;  // direction invisible to this setting
    const double kappa_cell = s.cell_width() / scale;
    const double y0 = hellinger_sq_split(half_a, half_b);

    auto delta_at = [&](int cells) {
        std::vector<int> shift(modes, 0);
        for (int i = 0; i < rates.size(); ++i)
            shift[i] = static_cast<int>(std::lround(cells * rates[i] / scale));
        Eigen::VectorXd moved = shift_histogram(half_a, modes, s.bins, shift);
        return hellinger_sq_split(moved, half_b) - y0;
    };
    auto g_at = [&](int cells) {  // averaged +-, divided by kappa^2
        double k = cells * kappa_cell;
        return 0.5 * (delta_at(cells) + delta_at(-cells)) / (k * k);
    };
    double g1 = g_at(s_lo);
    double g2 = g_at(2 * s_lo);
    return 2.0 * g1 - g2;
}

Eigen::MatrixXd hellinger_fisher_once(const Eigen::VectorXd& counts, const MeasurementSetting& s,
                                      int modes, const GeneratorSet& gens, std::uint64_t split_seed,
                                      int s_lo) {
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::VectorXd> rates(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (gens[i].order() != 1)
            throw std::invalid_argument("hellinger_fisher: histogram path handles order-1 generators");
        rates[i] = displacement_rates(gens[i], s);
    }
    Eigen::VectorXd half_a, half_b;
    split_histogram(counts, split_seed, half_a, half_b);
    for (Eigen::Index i = 0; i < n; ++i)
        f(i, i) = 8.0 * direction_curvature(half_a, half_b, s, modes, rates[i], s_lo);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (rates[i].cwiseAbs().maxCoeff() < 1e-12 || rates[j].cwiseAbs().maxCoeff() < 1e-12)
                continue;  // zero row/column: entry stays 0
            double a_plus = direction_curvature(half_a, half_b, s, modes, rates[i] + rates[j], s_lo);
            double a_minus = direction_curvature(half_a, half_b, s, modes, rates[i] - rates[j], s_lo);
            f(i, j) = f(j, i) = 2.0 * (a_plus - a_minus);
        }
    return f;
}

}  // namespace

FisherResult hellinger_fisher(const HomodyneDataset& data, const GeneratorSet& gens,
                              int bootstrap_reps, std::uint64_t bootstrap_seed, int shift_scale) {
    FisherResult out;
    out.method = "hellinger";
    out.mean = hellinger_fisher_once(data.counts, data.setting, data.modes, gens,
                                     derive_seed(data.seed, 0xD15C), shift_scale);
    out.std_err = Eigen::MatrixXd::Zero(out.mean.rows(), out.mean.cols());
    if (bootstrap_reps > 0) {
        GridPdf emp;
        emp.setting = data.setting;
        emp.modes = data.modes;
        emp.p = data.counts / data.counts.sum();
        std::vector<Eigen::MatrixXd> reps(bootstrap_reps);
        parallel_for(bootstrap_reps, [&](std::size_t r) {
            HomodyneDataset boot = sample(emp, data.n_samples, derive_seed(bootstrap_seed, r));
            reps[r] = hellinger_fisher_once(boot.counts, data.setting, data.modes, gens,
                                            derive_seed(bootstrap_seed, 0xD15C + r), shift_scale);
        });
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(out.mean.rows(), out.mean.cols());
        for (const auto& m : reps) mean += m;
        mean /= bootstrap_reps;
        Eigen::MatrixXd var = Eigen::MatrixXd::Zero(out.mean.rows(), out.mean.cols());
        for (const auto& m : reps) var += (m - mean).cwiseAbs2();
        var /= std::max(1, bootstrap_reps - 1);
        out.std_err = var.cwiseSqrt();
    }
    return out;
}

Eigen::MatrixXd analytic_fisher(const StateEnsemble& state, const GeneratorSet& gens,
                                const MeasurementSetting& setting, double fd_step) {
    // Pin the grid once (widen if needed), then evaluate all kappa variations
    // on that fixed grid.
    GridPdf base = marginal_distribution(state, setting);
    const MeasurementSetting s = base.setting;
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());

    auto pdf_at = [&](const Generator& g, double kappa) {
        ParamPath path = g.order() == 1 ? ParamPath::GridShift : ParamPath::Simulate;
        return parametrized_distribution(state, g, kappa, s, path).p;
    };

    std::vector<Eigen::VectorXd> grad(n);
    parallel_for(n, [&](std::size_t i) {
        const Generator& g = gens[static_cast<Eigen::Index>(i)];
        auto central = [&](double h) {
            return ((pdf_at(g, h) - pdf_at(g, -h)) / (2.0 * h)).eval();
        };
        Eigen::VectorXd d1 = central(fd_step);
        Eigen::VectorXd d2 = central(fd_step / 2.0);
        grad[i] = (4.0 * d2 - d1) / 3.0;
    });

    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < base.p.size(); ++c)
                if (base.p[c] > 1e-14) acc += grad[i][c] * grad[j][c] / base.p[c];
            f(i, j) = acc;
            f(j, i) = acc;
        }
    return f;
}

Eigen::MatrixXd embed_fisher(const Eigen::MatrixXd& f_subset, const std::vector<int>& subset_idx,
                             std::size_t full_size) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(full_size, full_size);
    for (std::size_t r = 0; r < subset_idx.size(); ++r)
        for (std::size_t c = 0; c < subset_idx.size(); ++c)
            out(subset_idx[r], subset_idx[c]) = f_subset(r, c);
    return out;
}

HomodyneWitnessContext make_homodyne_context(const Eigen::MatrixXd& gamma_full,
                                             std::vector<Eigen::MatrixXd> fishers,
                                             const GeneratorSet& gens, const Partition& partition) {
    partition.validate();
    HomodyneWitnessContext ctx;
    ctx.gens = gens;
    ctx.partition = partition;
    ctx.gamma_full = gamma_full;
    ctx.fishers = std::move(fishers);
    if (ctx.fishers.empty()) throw std::invalid_argument("homodyne witness: settings list empty");
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());
    if (gamma_full.rows() != n) throw std::invalid_argument("homodyne witness: Gamma size mismatch");
    for (const auto& f : ctx.fishers)
        if (f.rows() != n) throw std::invalid_argument("homodyne witness: Fisher size mismatch");
    ctx.local_idx = gens.local_indices(partition);
    for (int idx : ctx.local_idx)
        ctx.local_block.push_back(locality_of(gens[idx], partition).block);
    return ctx;
}

double HomodyneWitnessContext::eval_with_O(const Eigen::MatrixXd& O) const {
    Eigen::MatrixXd u = lift_basis_change(O, gens);
    Eigen::MatrixXd g_rot = u * gamma_full * u.transpose();
    const Eigen::Index n = static_cast<Eigen::Index>(local_idx.size());
    Eigen::MatrixXd g_loc(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) g_loc(r, c) = g_rot(local_idx[r], local_idx[c]);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            if (local_block[r] != local_block[c]) g_loc(r, c) = 0.0;

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& f : fishers) {
        Eigen::MatrixXd f_rot = u * f * u.transpose();
        Eigen::MatrixXd f_loc(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) f_loc(r, c) = f_rot(local_idx[r], local_idx[c]);
        best = std::max(best, witness_value(f_loc, g_loc));
    }
    return best;
}

double HomodyneWitnessContext::eval(const Eigen::VectorXd& theta_phi) const {
    const int count = basis_parameter_count(gens.modes);
    if (theta_phi.size() != 2 * count)
        throw std::invalid_argument("homodyne witness eval: parameter count mismatch");
    BasisChange bc = clements_orthogonal(theta_phi.head(count), theta_phi.tail(count), gens.modes);
    return eval_with_O(bc.O);
}

HomodyneWitnessReport homodyne_witness(const HomodyneWitnessContext& ctx, const OptimizerConfig& cfg) {
    const int dim = 2 * basis_parameter_count(ctx.gens.modes);
    OptResult r = minimize([&ctx](const Eigen::VectorXd& v) { return ctx.eval(v); }, dim, cfg);
    HomodyneWitnessReport rep;
    rep.w_hom = r.value;
    rep.argmin = r.argmin;
    rep.converged = r.converged;
    return rep;
}

}  // namespace mw
