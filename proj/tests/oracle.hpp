#pragma once

// Independent dense-matrix reference implementations used only by tests.
// Everything here is built from first principles (explicit operator
// matrices, literal symmetrization averages, Taylor-series exponentials)
// so it shares no code path with the library.

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline Mat lowering(int levels) {
    Mat a = Mat::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

inline Mat quad_q(int levels) { return lowering(levels) + lowering(levels).adjoint(); }

inline Mat quad_p(int levels) {
    Mat a = lowering(levels);
    return cxd(0, 1) * (a.adjoint() - a);
}

inline Mat kron(const Mat& x, const Mat& y) {
    Mat out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
}

// Taylor-series exponential with scaling and squaring.
inline Mat expm(const Mat& x) {
    double norm = x.cwiseAbs().sum();
    int squarings = 0;
    Mat scaled = x;
    while (norm > 0.5) {
        scaled /= 2.0;
        norm /= 2.0;
        ++squarings;
    }
    Mat out = Mat::Identity(x.rows(), x.cols());
    Mat term = out;
    for (int k = 1; k < 40; ++k) {
        term = term * scaled / double(k);
        out += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int sq = 0; sq < squarings; ++sq) out = out * out;
    return out;
}

// Literal symmetrization: average the operator product over every distinct
// ordering of the factor multiset. Labels index into `factors`.
inline Mat symmetrized_product(std::vector<int> labels, const std::vector<Mat>& factors) {
    std::sort(labels.begin(), labels.end());
    Mat sum = Mat::Zero(factors[0].rows(), factors[0].cols());
    long long count = 0;
    do {
        Mat prod = Mat::Identity(factors[0].rows(), factors[0].cols());
        for (int l : labels) prod = prod * factors[l];
        sum += prod;
        ++count;
    } while (std::next_permutation(labels.begin(), labels.end()));
    return sum / double(count);
}

// Full multimode symmetrized quadrature monomial as a dense matrix on the
// (levels^modes)-dimensional space; exponents are (q_1..q_m, p_1..p_m).
inline Mat weyl_monomial(const std::vector<int>& exponents, int modes, int levels) {
    std::vector<Mat> factors;
    std::vector<int> labels;
    Mat id = Mat::Identity(levels, levels);
    for (int j = 0; j < 2 * modes; ++j) {
        if (exponents[j] == 0) continue;
        int mode = j % modes;
        Mat single = (j < modes) ? quad_q(levels) : quad_p(levels);
        Mat embedded = Mat::Identity(1, 1);
        for (int k = 0; k < modes; ++k) embedded = kron(embedded, k == mode ? single : id);
        int index = static_cast<int>(factors.size());
        factors.push_back(embedded);
        for (int rep = 0; rep < exponents[j]; ++rep) labels.push_back(index);
    }
    return symmetrized_product(labels, factors);
}

// Loss channel by the explicit Kraus sum on a single mode.
inline Mat loss_channel(const Mat& rho, double eta) {
    int levels = static_cast<int>(rho.rows());
    Mat out = Mat::Zero(levels, levels);
    auto binom = [](int n, int k) {
        double r = 1;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    for (int k = 0; k < levels; ++k) {
        Mat kr = Mat::Zero(levels, levels);
        for (int n = k; n < levels; ++n)
            kr(n - k, n) = std::sqrt(binom(n, k) * std::pow(eta, n - k) * std::pow(1 - eta, k));
        out += kr * rho * kr.adjoint();
    }
    return out;
}

}  // namespace oracle
