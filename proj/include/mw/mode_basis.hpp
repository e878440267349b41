#pragma once

#include "mw/common.hpp"
#include "mw/generators.hpp"

namespace mw {

// Quadrature-level representation of a Clements-mesh passive interferometer.
// Quadrature ordering is (q1..qm, p1..pm). The mesh layout is fixed: columns
// alternate brick-wall pairs (0,1),(2,3),... then (1,2),(3,4),... over m
// columns; each beamsplitter R(theta) is preceded by a phase Ph(phi) on the
// top mode of its pair. The trailing layer of m local phases is omitted.
struct BasisChange {
    int modes = 0;
    Eigen::VectorXd theta;  // m(m-1)/2 beamsplitter angles
    Eigen::VectorXd phi;    // m(m-1)/2 phase angles
    Eigen::MatrixXd O;      // 2m x 2m orthogonal symplectic
};

int basis_parameter_count(int modes);  // m(m-1)/2 per angle family

BasisChange clements_orthogonal(const Eigen::VectorXd& theta, const Eigen::VectorXd& phi, int modes);
BasisChange clements_orthogonal(const std::vector<double>& flat_theta_phi, int modes);

// Building blocks in their 2m x 2m quadrature form.
Eigen::MatrixXd beamsplitter_quadrature(double theta, int mode, int modes);
Eigen::MatrixXd phase_quadrature(double phi, int mode, int modes);

// Maps between the complex mode unitary u (a -> u a) and its quadrature
// representation O = [[Re u, -Im u], [Im u, Re u]].
Eigen::MatrixXd quadrature_rep(const Eigen::MatrixXcd& u);
Eigen::MatrixXcd mode_unitary_from_quadrature(const Eigen::MatrixXd& O);

// Lift of O to the generator set: (H_i)' = sum_l U_il H_l with
// U_il = (1/prod_j k_j^(l)!) sum_{sigma in S_N} prod_s O^T(alpha_s, beta_sigma(s)).
// Block-diagonal across homogeneous orders; order-1 block equals O.
Eigen::MatrixXd lift_basis_change(const Eigen::MatrixXd& O, const GeneratorSet& gens);

// Drops rows/columns of non-local generators. index_map (optional) receives
// the retained original indices.
Eigen::MatrixXd restrict_local(const Eigen::MatrixXd& mat, const GeneratorSet& gens,
                               const Partition& partition, std::vector<int>* index_map = nullptr);

}  // namespace mw
