#include "mw/mode_basis.hpp"

#include <algorithm>
#include <cmath>

namespace mw {

int basis_parameter_count(int modes) { return modes * (modes - 1) / 2; }

Eigen::MatrixXd beamsplitter_quadrature(double theta, int mode, int modes) {
    Eigen::MatrixXd o = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    const double c = std::cos(theta), s = std::sin(theta);
    for (int blk : {0, modes}) {
        int i = blk + mode, j = blk + mode + 1;
        o(i, i) = c;
        o(i, j) = s;
        o(j, i) = -s;
        o(j, j) = c;
    }
    return o;
}

Eigen::MatrixXd phase_quadrature(double phi, int mode, int modes) {
    Eigen::MatrixXd o = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    const double c = std::cos(phi), s = std::sin(phi);
    int q = mode, p = modes + mode;
    o(q, q) = c;
    o(q, p) = s;
    o(p, q) = -s;
    o(p, p) = c;
    return o;
}

BasisChange clements_orthogonal(const Eigen::VectorXd& theta, const Eigen::VectorXd& phi, int modes) {
    const int count = basis_parameter_count(modes);
    if (theta.size() != count || phi.size() != count)
        throw std::invalid_argument("clements: wrong parameter count");
    BasisChange bc;
    bc.modes = modes;
    bc.theta = theta;
    bc.phi = phi;
    Eigen::MatrixXd o = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    int idx = 0;
    for (int col = 0; col < modes; ++col) {
        for (int top = (col % 2 == 0) ? 0 : 1; top + 1 < modes; top += 2) {
            // element order: phase on the top mode, then the beamsplitter
            o = phase_quadrature(phi[idx], top, modes) * o;
            o = beamsplitter_quadrature(theta[idx], top, modes) * o;
            ++idx;
        }
    }
    bc.O = o;
    return bc;
}

BasisChange clements_orthogonal(const std::vector<double>& flat, int modes) {
    const int count = basis_parameter_count(modes);
    if (static_cast<int>(flat.size()) != 2 * count)
        throw std::invalid_argument("clements: wrong parameter count");
    Eigen::VectorXd theta(count), phi(count);
    for (int i = 0; i < count; ++i) {
        theta[i] = flat[i];
        phi[i] = flat[count + i];
    }
    return clements_orthogonal(theta, phi, modes);
}

Eigen::MatrixXd quadrature_rep(const Eigen::MatrixXcd& u) {
    const int m = static_cast<int>(u.rows());
    Eigen::MatrixXd o(2 * m, 2 * m);
    o.topLeftCorner(m, m) = u.real();
    o.topRightCorner(m, m) = -u.imag();
    o.bottomLeftCorner(m, m) = u.imag();
    o.bottomRightCorner(m, m) = u.real();
    return o;
}

Eigen::MatrixXcd mode_unitary_from_quadrature(const Eigen::MatrixXd& O) {
    const int m = static_cast<int>(O.rows()) / 2;
    double symp_dev =
        (O.topLeftCorner(m, m) - O.bottomRightCorner(m, m)).cwiseAbs().maxCoeff() +
        (O.topRightCorner(m, m) + O.bottomLeftCorner(m, m)).cwiseAbs().maxCoeff();
    if (symp_dev > 1e-8)
        throw std::invalid_argument("mode unitary: quadrature matrix is not orthogonal-symplectic");
    return O.topLeftCorner(m, m) + cxd(0, 1) * O.bottomLeftCorner(m, m);
}

namespace {

// Multiset index vector of a generator: mode index repeated per exponent,
// q modes as 0..m-1, p modes as m..2m-1 (matching quadrature ordering).
std::vector<int> multiset_indices(const Generator& g) {
    std::vector<int> idx;
    idx.reserve(g.order());
    for (std::size_t j = 0; j < g.exponents.size(); ++j)
        for (int rep = 0; rep < g.exponents[j]; ++rep) idx.push_back(static_cast<int>(j));
    return idx;
}

double exponent_factorial(const Generator& g) {
    double f = 1.0;
    for (int k : g.exponents)
        for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace

Eigen::MatrixXd lift_basis_change(const Eigen::MatrixXd& O, const GeneratorSet& gens) {
    const int m = gens.modes;
    if (O.rows() != 2 * m || O.cols() != 2 * m)
        throw std::invalid_argument("lift: quadrature matrix size mismatch");
    if (gens.max_order > kMaxGeneratorOrder)
        throw std::invalid_argument("lift: generator order beyond factorial guard");
    const Eigen::MatrixXd ot = O.transpose();
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);

    std::vector<std::vector<int>> beta(n), alpha(n);
    std::vector<double> norm(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        beta[i] = multiset_indices(gens[i]);
        alpha[i] = beta[i];
        norm[i] = exponent_factorial(gens[i]);
    }

    std::vector<int> perm;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int order = gens[i].order();
        for (Eigen::Index l = 0; l < n; ++l) {
            if (gens[l].order() != order) continue;  // blocks are order-homogeneous
            perm.resize(order);
            for (int s = 0; s < order; ++s) perm[s] = s;
            double sum = 0.0;
            do {
                double prod = 1.0;
                for (int s = 0; s < order; ++s) {
                    prod *= ot(alpha[l][s], beta[i][perm[s]]);
                    if (prod == 0.0) break;
                }
                sum += prod;
            } while (std::next_permutation(perm.begin(), perm.end()));
            u(i, l) = sum / norm[l];
        }
    }
    return u;
}

Eigen::MatrixXd restrict_local(const Eigen::MatrixXd& mat, const GeneratorSet& gens,
                               const Partition& partition, std::vector<int>* index_map) {
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());
    if (mat.rows() != n || mat.cols() != n)
        throw std::invalid_argument("restrict_local: matrix dimension mismatch");
    std::vector<int> keep = gens.local_indices(partition);
    Eigen::MatrixXd out(keep.size(), keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r)
        for (std::size_t c = 0; c < keep.size(); ++c) out(r, c) = mat(keep[r], keep[c]);
    if (index_map) *index_map = keep;
    return out;
}

}  // namespace mw
