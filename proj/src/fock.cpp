#include "mw/fock.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

namespace mw {

namespace {

using RowMat = Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Index pow_ll(int base, int exp) {
    Eigen::Index r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

void check_state_shape(int modes, int cutoff) {
    if (modes < 1) throw std::invalid_argument("state: modes must be >= 1");
    if (cutoff < 2) throw std::invalid_argument("state: cutoff must be >= 2");
}

// exp(X) for anti-Hermitian X via the Hermitian eigendecomposition of iX.
Eigen::MatrixXcd exp_antihermitian(const Eigen::MatrixXcd& x) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cxd(0, 1) * x);
    Eigen::VectorXcd phases =
        (cxd(0, -1) * es.eigenvalues().array().cast<cxd>()).exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Applies a levels x levels matrix to one tensor axis of a raw amplitude
// buffer (row-major, mode 0 slowest).
void apply_axis_op(cxd* data, int modes, int levels, int mode, const Eigen::MatrixXcd& op) {
    const Eigen::Index left = pow_ll(levels, mode);
    const Eigen::Index right = pow_ll(levels, modes - 1 - mode);
    const Eigen::Index block = static_cast<Eigen::Index>(levels) * right;
    Eigen::MatrixXcd tmp(levels, right);
    for (Eigen::Index l = 0; l < left; ++l) {
        Eigen::Map<RowMat> view(data + l * block, levels, right);
        tmp.noalias() = op * view;
        view = tmp;
    }
}

}  // namespace

double PureState::top_layer_probability(int mode) const {
    const int d = levels();
    const Eigen::Index right = pow_ll(d, modes - 1 - mode);
    const Eigen::Index left = pow_ll(d, mode);
    const Eigen::Index block = static_cast<Eigen::Index>(d) * right;
    double p = 0.0;
    for (Eigen::Index l = 0; l < left; ++l) {
        const cxd* base = amp.data() + l * block + static_cast<Eigen::Index>(cutoff) * right;
        for (Eigen::Index r = 0; r < right; ++r) p += std::norm(base[r]);
    }
    return p;
}

double PureState::max_top_layer_probability() const {
    double p = 0.0;
    for (int k = 0; k < modes; ++k) p = std::max(p, top_layer_probability(k));
    return p;
}

double DensityState::top_layer_probability(int mode) const {
    const int d = levels();
    const Eigen::Index right = pow_ll(d, modes - 1 - mode);
    const Eigen::Index left = pow_ll(d, mode);
    const Eigen::Index block = static_cast<Eigen::Index>(d) * right;
    double p = 0.0;
    for (Eigen::Index l = 0; l < left; ++l)
        for (Eigen::Index r = 0; r < right; ++r) {
            Eigen::Index idx = l * block + static_cast<Eigen::Index>(cutoff) * right + r;
            p += rho(idx, idx).real();
        }
    return p;
}

double DensityState::max_top_layer_probability() const {
    double p = 0.0;
    for (int k = 0; k < modes; ++k) p = std::max(p, top_layer_probability(k));
    return p;
}

PureState vacuum_state(int modes, int cutoff) {
    check_state_shape(modes, cutoff);
    PureState s;
    s.modes = modes;
    s.cutoff = cutoff;
    s.amp = Eigen::VectorXcd::Zero(pow_ll(cutoff + 1, modes));
    s.amp[0] = 1.0;
    return s;
}

PureState fock_basis_state(int modes, int cutoff, const std::vector<int>& occupation) {
    check_state_shape(modes, cutoff);
    if (static_cast<int>(occupation.size()) != modes)
        throw std::invalid_argument("fock_basis_state: occupation size mismatch");
    Eigen::Index idx = 0;
    for (int n : occupation) {
        if (n < 0 || n > cutoff) throw std::invalid_argument("fock_basis_state: level out of range");
        idx = idx * (cutoff + 1) + n;
    }
    PureState s;
    s.modes = modes;
    s.cutoff = cutoff;
    s.amp = Eigen::VectorXcd::Zero(pow_ll(cutoff + 1, modes));
    s.amp[idx] = 1.0;
    return s;
}

Eigen::MatrixXcd annihilation_matrix(int levels) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Eigen::MatrixXcd quadrature_q_matrix(int levels) {
    Eigen::MatrixXcd a = annihilation_matrix(levels);
    return a + a.adjoint();
}

Eigen::MatrixXcd quadrature_p_matrix(int levels) {
    Eigen::MatrixXcd a = annihilation_matrix(levels);
    return cxd(0, 1) * (a.adjoint() - a);
}

Eigen::MatrixXcd squeezer_matrix(double r, int levels) {
    Eigen::MatrixXcd a = annihilation_matrix(levels);
    Eigen::MatrixXcd x = 0.5 * r * (a * a - (a * a).adjoint().eval());
    return exp_antihermitian(x);
}

int auto_cutoff_for_squeezing(double r_abs_max, double leak_threshold, int cap) {
    const double r = std::abs(r_abs_max);
    if (r == 0.0) return 2;
    const double t2 = std::tanh(r) * std::tanh(r);
    const double inv_cosh = 1.0 / std::cosh(r);
    // |c_{2k}|^2 = tanh^{2k} r * C(2k,k)/4^k / cosh r; tail summed directly.
    std::vector<double> probs;
    double central = 1.0;  // C(2k,k)/4^k, recurrence central *= (2k-1)/(2k)
    probs.push_back(inv_cosh);
    double tk = 1.0;
    for (int k = 1; 2 * k <= cap; ++k) {
        central *= (2.0 * k - 1.0) / (2.0 * k);
        tk *= t2;
        probs.push_back(inv_cosh * tk * central);
    }
    double tail = std::max(0.0, 1.0 - std::accumulate(probs.begin(), probs.end(), 0.0));
    for (int k = static_cast<int>(probs.size()) - 1; k >= 1; --k) {
        tail += probs[k];
        if (tail >= leak_threshold) {
            int cutoff = 2 * (k + 1);
            if (cutoff > cap)
                throw std::runtime_error("auto_cutoff_for_squeezing: cap exceeded for requested leakage");
            return std::max(cutoff, 2);
        }
    }
    return 2;
}

PureState squeezed_vacuum(const std::vector<double>& r, int cutoff, double leak_threshold) {
    const int modes = static_cast<int>(r.size());
    check_state_shape(modes, cutoff);
    const int d = cutoff + 1;
    std::vector<Eigen::VectorXcd> single(modes);
    for (int k = 0; k < modes; ++k) single[k] = squeezer_matrix(r[k], d).col(0);

    PureState s;
    s.modes = modes;
    s.cutoff = cutoff;
    s.amp.resize(pow_ll(d, modes));
    std::vector<int> n(modes, 0);
    for (Eigen::Index idx = 0; idx < s.amp.size(); ++idx) {
        Eigen::Index rem = idx;
        cxd v = 1.0;
        for (int k = modes - 1; k >= 0; --k) {
            int level = static_cast<int>(rem % d);
            rem /= d;
            v *= single[k][level];
        }
        s.amp[idx] = v;
    }
    double leak = s.max_top_layer_probability();
    if (leak > leak_threshold)
        throw std::runtime_error("squeezed_vacuum: truncation leakage " + std::to_string(leak) +
                                 " exceeds threshold (cutoff too small)");
    return s;
}

Eigen::MatrixXcd single_mode_weyl(int q_exp, int p_exp, int levels) {
    if (q_exp < 0 || p_exp < 0) throw std::invalid_argument("weyl: negative exponent");
    if (q_exp + p_exp > kMaxMomentOrder)
        throw std::invalid_argument("weyl: monomial order beyond configured moment limit");
    const Eigen::MatrixXcd q = quadrature_q_matrix(levels);
    const Eigen::MatrixXcd p = quadrature_p_matrix(levels);
    // Equal-weight ordering average by recursion on the trailing factor:
    // W(a,b) = [a W(a-1,b) q + b W(a,b-1) p] / (a+b). Pure matrix algebra,
    // identical to the literal (a+b)!-term average even on the truncated
    // space, where commutator-based rearrangements (McCoy) pick up boundary
    // defects.
    std::vector<std::vector<Eigen::MatrixXcd>> table(
        q_exp + 1, std::vector<Eigen::MatrixXcd>(p_exp + 1));
    table[0][0] = Eigen::MatrixXcd::Identity(levels, levels);
    for (int a = 0; a <= q_exp; ++a)
        for (int b = 0; b <= p_exp; ++b) {
            if (a == 0 && b == 0) continue;
            Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(levels, levels);
            if (a > 0) acc += a * (table[a - 1][b] * q);
            if (b > 0) acc += b * (table[a][b - 1] * p);
            table[a][b] = acc / double(a + b);
        }
    return table[q_exp][p_exp];
}

void apply_single_mode_op(PureState& state, int mode, const Eigen::MatrixXcd& op) {
    if (mode < 0 || mode >= state.modes) throw std::invalid_argument("apply op: mode out of range");
    if (op.rows() != state.levels() || op.cols() != state.levels())
        throw std::invalid_argument("apply op: matrix size mismatch");
    apply_axis_op(state.amp.data(), state.modes, state.levels(), mode, op);
}

void apply_two_mode_op(PureState& state, int mode, const Eigen::MatrixXcd& op) {
    const int d = state.levels();
    if (mode < 0 || mode + 1 >= state.modes) throw std::invalid_argument("apply op: mode pair out of range");
    if (op.rows() != d * d || op.cols() != d * d)
        throw std::invalid_argument("apply op: matrix size mismatch");
    const Eigen::Index left = pow_ll(d, mode);
    const Eigen::Index right = pow_ll(d, state.modes - 2 - mode);
    const Eigen::Index block = static_cast<Eigen::Index>(d) * d * right;
    Eigen::MatrixXcd tmp(d * d, right);
    for (Eigen::Index l = 0; l < left; ++l) {
        Eigen::Map<RowMat> view(state.amp.data() + l * block, d * d, right);
        tmp.noalias() = op * view;
        view = tmp;
    }
}

namespace {

// Fock-space beamsplitter exp(theta (a0^dag a1 - a1^dag a0)) on two modes.
// The theta-independent eigendecomposition is cached per dimension.
struct BsBasis {
    Eigen::MatrixXcd vectors;
    Eigen::VectorXd eigs;
};

const BsBasis& beamsplitter_basis(int levels) {
    static std::mutex mu;
    static std::vector<std::pair<int, BsBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    for (auto& e : cache)
        if (e.first == levels) return e.second;
    const Eigen::MatrixXcd a = annihilation_matrix(levels);
    const Eigen::MatrixXcd ad = a.adjoint();
    auto kron = [levels](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
        Eigen::MatrixXcd out(levels * levels, levels * levels);
        for (int i = 0; i < levels; ++i)
            for (int j = 0; j < levels; ++j)
                out.block(i * levels, j * levels, levels, levels) = x(i, j) * y;
        return out;
    };
    Eigen::MatrixXcd k = kron(ad, a) - kron(a, ad);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cxd(0, 1) * k);
    cache.push_back({levels, BsBasis{es.eigenvectors(), es.eigenvalues()}});
    return cache.back().second;
}

Eigen::MatrixXcd beamsplitter_fock(double theta, int levels) {
    const BsBasis& b = beamsplitter_basis(levels);
    Eigen::VectorXcd ph(b.eigs.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(cxd(0, -theta * b.eigs[i]));
    return b.vectors * ph.asDiagonal() * b.vectors.adjoint();
}

void apply_mode_phase(PureState& state, int mode, double alpha) {
    // Phase D with D_kk = e^{i alpha}: U = exp(i alpha n_k), diagonal in Fock.
    const int d = state.levels();
    Eigen::VectorXcd diag(d);
    for (int n = 0; n < d; ++n) diag[n] = std::exp(cxd(0, alpha * n));
    const Eigen::Index left = pow_ll(d, mode);
    const Eigen::Index right = pow_ll(d, state.modes - 1 - mode);
    const Eigen::Index block = static_cast<Eigen::Index>(d) * right;
    for (Eigen::Index l = 0; l < left; ++l) {
        cxd* base = state.amp.data() + l * block;
        for (int n = 0; n < d; ++n) {
            cxd f = diag[n];
            cxd* row = base + static_cast<Eigen::Index>(n) * right;
            for (Eigen::Index r = 0; r < right; ++r) row[r] *= f;
        }
    }
}

// Applies the embedded two-mode unitary block g on modes (mode, mode+1),
// factored as diag(e^{ia}, e^{ib}) R(theta) diag(1, e^{id}).
void apply_givens_block(PureState& state, int mode, const Eigen::Matrix2cd& g) {
    const double c = std::abs(g(0, 0));
    const double s = std::abs(g(0, 1));
    const double phi00 = (c > 1e-300) ? std::arg(g(0, 0)) : 0.0;
    const double phi01 = (s > 1e-300) ? std::arg(g(0, 1)) : phi00;
    const double chi = std::arg(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0));
    const double theta = std::atan2(s, c);
    const double a = phi00;
    const double d_ph = phi01 - phi00;
    const double b = chi - phi01;
    // rightmost factor first
    apply_mode_phase(state, mode + 1, d_ph);
    apply_two_mode_op(state, mode, beamsplitter_fock(theta, state.levels()));
    apply_mode_phase(state, mode, a);
    apply_mode_phase(state, mode + 1, b);
}

}  // namespace

Eigen::MatrixXcd two_mode_passive_fock(const Eigen::Matrix2cd& g, int levels) {
    // Matrix form assembled by applying the block to each basis state; used
    // by tests and small-system callers.
    const Eigen::Index dim = static_cast<Eigen::Index>(levels) * levels;
    Eigen::MatrixXcd out(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        PureState basis;
        basis.modes = 2;
        basis.cutoff = levels - 1;
        basis.amp = Eigen::VectorXcd::Zero(dim);
        basis.amp[col] = 1.0;
        apply_givens_block(basis, 0, g);
        out.col(col) = basis.amp;
    }
    return out;
}

PureState apply_passive_unitary(const PureState& state, const Eigen::MatrixXcd& u,
                                double unitarity_tol) {
    const int m = state.modes;
    if (u.rows() != m || u.cols() != m)
        throw std::invalid_argument("passive unitary: matrix size must equal mode count");
    double dev = (u.adjoint() * u - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
    if (dev > unitarity_tol)
        throw std::invalid_argument("passive unitary: input not unitary within tolerance");

    // Triangularize with adjacent-pair Givens blocks: G_K ... G_1 u = D,
    // so U(u) = U(G_1^dag) ... U(G_K^dag) U(D) applied right to left.
    Eigen::MatrixXcd mtx = u;
    std::vector<std::pair<int, Eigen::Matrix2cd>> givens;
    for (int col = 0; col < m; ++col) {
        for (int row = m - 1; row > col; --row) {
            cxd alpha = mtx(row - 1, col);
            cxd beta = mtx(row, col);
            double rho = std::sqrt(std::norm(alpha) + std::norm(beta));
            if (rho < 1e-300 || std::abs(beta) < 1e-300) continue;
            Eigen::Matrix2cd g;
            g << std::conj(alpha) / rho, std::conj(beta) / rho, -beta / rho, alpha / rho;
            mtx.block(row - 1, 0, 2, m) = (g * mtx.block(row - 1, 0, 2, m)).eval();
            givens.emplace_back(row - 1, g);
        }
    }

    PureState out = state;
    for (int k = 0; k < m; ++k) apply_mode_phase(out, k, std::arg(mtx(k, k)));
    for (auto it = givens.rbegin(); it != givens.rend(); ++it)
        apply_givens_block(out, it->first, it->second.adjoint());
    return out;
}

PureState subtract_photon(const PureState& state, const Eigen::VectorXcd& coeffs,
                          double* weight_out, double norm_floor) {
    if (coeffs.size() != state.modes)
        throw std::invalid_argument("subtract_photon: coefficient count mismatch");
    const int d = state.levels();
    const Eigen::MatrixXcd a = annihilation_matrix(d);
    PureState out = state;
    out.amp.setZero();
    for (int k = 0; k < state.modes; ++k) {
        if (coeffs[k] == cxd(0, 0)) continue;
        PureState term = state;
        apply_single_mode_op(term, k, a);
        out.amp += coeffs[k] * term.amp;
    }
    double w = out.norm_sq();
    if (weight_out) *weight_out = w;
    if (w < norm_floor)
        throw std::runtime_error("subtract_photon: subtraction probability ~ 0 (norm below floor)");
    out.amp /= std::sqrt(w);
    return out;
}

PureState subtract_photon(const PureState& state, double theta, double* weight_out,
                          double norm_floor) {
    if (state.modes != 2)
        throw std::invalid_argument("subtract_photon(theta): angle form is two-mode only");
    Eigen::VectorXcd c(2);
    c << std::cos(theta), std::sin(theta);
    return subtract_photon(state, c, weight_out, norm_floor);
}

namespace {

void check_density_guard(int modes, int cutoff) {
    const Eigen::Index entries = pow_ll(cutoff + 1, 2 * modes);
    if (modes > kMaxDensityModes || entries > (Eigen::Index(1) << 21))
        throw std::invalid_argument("density state: size beyond memory guard");
}

Eigen::MatrixXcd loss_kraus(int levels, int k, double eta) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(levels, levels);
    for (int n = k; n < levels; ++n) {
        double binom = 1.0;
        for (int i = 1; i <= k; ++i) binom = binom * (n - k + i) / i;
        out(n - k, n) = std::sqrt(binom * std::pow(eta, n - k) * std::pow(1.0 - eta, k));
    }
    return out;
}

void apply_kraus_channel(DensityState& st, int mode, double eta) {
    if (eta == 1.0) return;
    const int d = st.levels();
    const Eigen::Index dim = st.dim();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::MatrixXcd work(dim, dim);
    for (int k = 0; k < d; ++k) {
        Eigen::MatrixXcd kr = loss_kraus(d, k, eta);
        // T = K rho (ket side), then contribution (K T^dag)^dag = T K^dag.
        work = st.rho;
        for (Eigen::Index c = 0; c < dim; ++c)
            apply_axis_op(work.col(c).data(), st.modes, d, mode, kr);
        Eigen::MatrixXcd t_adj = work.adjoint();
        for (Eigen::Index c = 0; c < dim; ++c)
            apply_axis_op(t_adj.col(c).data(), st.modes, d, mode, kr);
        acc += t_adj.adjoint();
    }
    st.rho = acc;
}

}  // namespace

DensityState density_from_pure(const PureState& state) {
    check_density_guard(state.modes, state.cutoff);
    DensityState d;
    d.modes = state.modes;
    d.cutoff = state.cutoff;
    d.rho = state.amp * state.amp.adjoint();
    return d;
}

DensityState apply_loss(const PureState& state, const std::vector<double>& eta) {
    DensityState d = density_from_pure(state);
    return apply_loss(d, eta);
}

DensityState apply_loss(const DensityState& state, const std::vector<double>& eta) {
    if (static_cast<int>(eta.size()) != state.modes)
        throw std::invalid_argument("apply_loss: eta count mismatch");
    for (double e : eta)
        if (e < 0.0 || e > 1.0) throw std::invalid_argument("apply_loss: eta outside [0,1]");
    check_density_guard(state.modes, state.cutoff);
    DensityState out = state;
    for (int k = 0; k < state.modes; ++k) apply_kraus_channel(out, k, eta[k]);
    return out;
}

namespace {

// Per-mode Weyl factors of a monomial; modes with zero exponents omitted.
std::vector<std::pair<int, Eigen::MatrixXcd>> weyl_factors(const Generator& mono, int levels) {
    int total = mono.order();
    if (total > kMaxMomentOrder)
        throw std::invalid_argument("expectation: monomial order beyond configured moment limit");
    if (total < 1) throw std::invalid_argument("expectation: monomial order must be >= 1");
    std::vector<std::pair<int, Eigen::MatrixXcd>> out;
    for (int mode = 0; mode < mono.modes(); ++mode) {
        int a = mono.q_exp(mode), b = mono.p_exp(mode);
        if (a + b == 0) continue;
        out.emplace_back(mode, single_mode_weyl(a, b, levels));
    }
    return out;
}

}  // namespace

PureState apply_generator(const PureState& state, const Generator& mono) {
    if (mono.modes() != state.modes)
        throw std::invalid_argument("apply_generator: mode count mismatch");
    PureState out = state;
    for (const auto& [mode, op] : weyl_factors(mono, state.levels()))
        apply_single_mode_op(out, mode, op);
    return out;
}

double expectation(const PureState& state, const Generator& mono) {
    PureState h = apply_generator(state, mono);
    return state.amp.dot(h.amp).real();
}

double expectation(const DensityState& state, const Generator& mono) {
    if (mono.modes() != state.modes)
        throw std::invalid_argument("expectation: mode count mismatch");
    Eigen::MatrixXcd work = state.rho;
    for (const auto& [mode, op] : weyl_factors(mono, state.levels()))
        for (Eigen::Index c = 0; c < work.cols(); ++c)
            apply_axis_op(work.col(c).data(), state.modes, state.levels(), mode, op);
    return work.trace().real();
}

std::vector<EigenPair> full_spectrum(const DensityState& rho) {
    double herm_dev = (rho.rho - rho.rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm_dev > 1e-8) throw std::invalid_argument("spectral decomposition: non-Hermitian input");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.rho);
    std::vector<EigenPair> pairs;
    pairs.reserve(rho.dim());
    for (Eigen::Index i = rho.dim() - 1; i >= 0; --i) {
        double p = std::max(0.0, es.eigenvalues()[i]);
        pairs.push_back({p, es.eigenvectors().col(i)});
    }
    return pairs;
}

std::vector<EigenPair> spectral_decompose(const DensityState& rho, double p_floor) {
    std::vector<EigenPair> all = full_spectrum(rho);
    std::vector<EigenPair> kept;
    for (auto& e : all)
        if (e.p >= p_floor) kept.push_back(std::move(e));
    return kept;
}

Eigen::MatrixXcd generator_matrix(const Generator& mono, int modes, int levels) {
    if (mono.modes() != modes) throw std::invalid_argument("generator_matrix: mode count mismatch");
    Eigen::Index dim = pow_ll(levels, modes);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(dim, dim);
    for (const auto& [mode, op] : weyl_factors(mono, levels))
        for (Eigen::Index c = 0; c < dim; ++c)
            apply_axis_op(out.col(c).data(), modes, levels, mode, op);
    return out;
}

}  // namespace mw
