#include "mw/cluster.hpp"

#include <cmath>

#include "mw/mode_basis.hpp"

namespace mw {

void ClusterSpec::validate() const {
    const int m = modes();
    if (m < 1 || adjacency.cols() != m) throw std::invalid_argument("cluster: adjacency must be square");
    for (int i = 0; i < m; ++i) {
        if (adjacency(i, i) != 0.0) throw std::invalid_argument("cluster: adjacency diagonal must be zero");
        for (int j = 0; j < m; ++j) {
            if (adjacency(i, j) != adjacency(j, i))
                throw std::invalid_argument("cluster: adjacency must be symmetric");
            if (adjacency(i, j) != 0.0 && adjacency(i, j) != 1.0)
                throw std::invalid_argument("cluster: adjacency entries must be 0/1");
        }
    }
    if (static_cast<int>(squeezing_db.size()) != m)
        throw std::invalid_argument("cluster: squeezing count mismatch");
    if (subtract_node < 0 || subtract_node >= m)
        throw std::invalid_argument("cluster: subtraction node out of range");
}

Eigen::MatrixXd named_adjacency(const std::string& name) {
    auto chain = [](int m) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i + 1 < m; ++i) v(i, i + 1) = v(i + 1, i) = 1.0;
        return v;
    };
    if (name == "chain3") return chain(3);
    if (name == "graph4_paper") return chain(4);
    if (name == "graph5_paper") return chain(5);
    throw std::invalid_argument("unknown named adjacency: " + name);
}

Eigen::MatrixXcd cluster_unitary(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& o_free,
                                 double orth_tol) {
    const int m = static_cast<int>(adjacency.rows());
    if (o_free.rows() != m || o_free.cols() != m)
        throw std::invalid_argument("cluster_unitary: O size mismatch");
    double dev = (o_free.transpose() * o_free - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
    if (dev > orth_tol) throw std::invalid_argument("cluster_unitary: O not orthogonal");
    // (1 + iV)(V^2 + 1)^(-1/2) = W diag(e^{i atan v}) W^T for V = W diag(v) W^T.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(adjacency);
    Eigen::VectorXcd phases(m);
    for (int i = 0; i < m; ++i) phases[i] = std::exp(cxd(0, std::atan(es.eigenvalues()[i])));
    Eigen::MatrixXcd core = es.eigenvectors().cast<cxd>() * phases.asDiagonal() *
                            es.eigenvectors().transpose().cast<cxd>();
    return core * o_free.cast<cxd>();
}

Eigen::MatrixXd givens_orthogonal(const Eigen::VectorXd& angles, int modes) {
    if (angles.size() != basis_parameter_count(modes))
        throw std::invalid_argument("givens_orthogonal: angle count mismatch");
    Eigen::MatrixXd o = Eigen::MatrixXd::Identity(modes, modes);
    int idx = 0;
    for (int i = 0; i < modes; ++i)
        for (int j = i + 1; j < modes; ++j) {
            double c = std::cos(angles[idx]), s = std::sin(angles[idx]);
            ++idx;
            Eigen::MatrixXd g = Eigen::MatrixXd::Identity(modes, modes);
            g(i, i) = c;
            g(i, j) = s;
            g(j, i) = -s;
            g(j, j) = c;
            o = g * o;
        }
    return o;
}

std::vector<double> nullifier_variances(const PureState& state, const Eigen::MatrixXd& adjacency) {
    const int m = state.modes;
    if (adjacency.rows() != m) throw std::invalid_argument("nullifiers: dimension mismatch");
    // Var(delta_i) from first and second quadrature moments.
    Eigen::VectorXd means(2 * m);
    Eigen::MatrixXd second(2 * m, 2 * m);
    auto mono = [m](int a, int b) {
        Generator g;
        g.exponents.assign(2 * m, 0);
        g.exponents[a] += 1;
        g.exponents[b] += 1;
        return g;
    };
    for (int a = 0; a < 2 * m; ++a) {
        Generator g1;
        g1.exponents.assign(2 * m, 0);
        g1.exponents[a] = 1;
        means[a] = expectation(state, g1);
    }
    for (int a = 0; a < 2 * m; ++a)
        for (int b = a; b < 2 * m; ++b) {
            double v = expectation(state, mono(a, b));
            second(a, b) = v;
            second(b, a) = v;
        }
    Eigen::MatrixXd cov = second - means * means.transpose();
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(2 * m);
        coeff[m + i] = 1.0;  // p_i
        for (int k = 0; k < m; ++k) coeff[k] -= adjacency(i, k);
        out[i] = coeff.dot(cov * coeff);
    }
    return out;
}

std::vector<double> nullifier_variances_gaussian(const Eigen::MatrixXd& adjacency,
                                                 const std::vector<double>& r_natural,
                                                 const Eigen::MatrixXd& o_free) {
    const int m = static_cast<int>(adjacency.rows());
    if (static_cast<int>(r_natural.size()) != m)
        throw std::invalid_argument("nullifiers: squeezing count mismatch");
    Eigen::MatrixXcd u = cluster_unitary(adjacency, o_free);
    Eigen::MatrixXd o = quadrature_rep(u);
    Eigen::VectorXd diag(2 * m);
    for (int k = 0; k < m; ++k) {
        diag[k] = std::exp(-2.0 * r_natural[k]);      // Var(q_k)
        diag[m + k] = std::exp(2.0 * r_natural[k]);   // Var(p_k)
    }
    Eigen::MatrixXd cov = o * diag.asDiagonal() * o.transpose();
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(2 * m);
        coeff[m + i] = 1.0;
        for (int k = 0; k < m; ++k) coeff[k] -= adjacency(i, k);
        out[i] = coeff.dot(cov * coeff);
    }
    return out;
}

ClusterOptResult optimize_cluster(const ClusterSpec& spec, const OptimizerConfig& cfg,
                                  bool tie_break_decoupling) {
    spec.validate();
    const int m = spec.modes();
    std::vector<double> r(m);
    for (int k = 0; k < m; ++k) r[k] = squeezing_db_to_r(spec.squeezing_db[k]);

    auto objective = [&](const Eigen::VectorXd& angles) {
        Eigen::MatrixXd o = givens_orthogonal(angles, m);
        std::vector<double> vars = nullifier_variances_gaussian(spec.adjacency, r, o);
        double sum = 0.0;
        for (double v : vars) sum += v;
        return sum;
    };
    auto min_input_weight = [&](const Eigen::VectorXd& angles) {
        Eigen::MatrixXcd u = cluster_unitary(spec.adjacency, givens_orthogonal(angles, m));
        double best = 1e300;
        for (int k = 0; k < m; ++k) best = std::min(best, std::norm(u(spec.subtract_node, k)));
        return best;
    };

    ClusterOptResult out;
    if (m == 1) {
        out.o_free = Eigen::MatrixXd::Identity(1, 1);
        out.angles = Eigen::VectorXd(0);
        out.variances = nullifier_variances_gaussian(spec.adjacency, r, out.o_free);
        out.objective = out.variances[0];
        out.decoupled_input_weight = 1.0;
        out.converged = true;
        return out;
    }

    OptimizerConfig ga = cfg;
    ga.strategy = OptStrategy::Genetic;
    OptResult res = minimize(objective, basis_parameter_count(m), ga);
    Eigen::VectorXd angles = res.argmin;
    double best_sum = res.value;

    if (tie_break_decoupling) {
        // Walk the flat valley of the primary objective toward an O whose
        // U_V subtraction row has a vanishing input component.
        const double band = 1e-9;
        auto secondary = [&](const Eigen::VectorXd& a) {
            double excess = std::max(0.0, objective(a) - (best_sum + band));
            return min_input_weight(a) + 1e4 * excess * excess;
        };
        OptimizerConfig tie = cfg;
        tie.strategy = OptStrategy::Genetic;
        tie.seed = derive_seed(cfg.seed, 99);
        tie.ga_restarts = std::max(2, cfg.ga_restarts);
        tie.seeds.push_back(angles);
        OptResult sec = minimize(secondary, basis_parameter_count(m), tie);
        if (objective(sec.argmin) <= best_sum + 1e-7) angles = sec.argmin;
    }

    out.angles = angles;
    out.o_free = givens_orthogonal(angles, m);
    out.variances = nullifier_variances_gaussian(spec.adjacency, r, out.o_free);
    out.objective = objective(angles);
    out.decoupled_input_weight = min_input_weight(angles);
    out.converged = res.converged;
    return out;
}

PureState build_cluster_state(const ClusterSpec& spec, const Eigen::MatrixXd& o_free, int cutoff,
                              double leak_threshold) {
    spec.validate();
    const int m = spec.modes();
    std::vector<double> r(m);
    for (int k = 0; k < m; ++k) r[k] = squeezing_db_to_r(spec.squeezing_db[k]);
    PureState s = squeezed_vacuum(r, cutoff, leak_threshold);
    return apply_passive_unitary(s, cluster_unitary(spec.adjacency, o_free));
}

}  // namespace mw
