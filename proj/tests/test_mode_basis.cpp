#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "mw/fock.hpp"
#include "mw/mode_basis.hpp"

using namespace mw;

namespace {

Eigen::VectorXd random_angles(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0, 2 * M_PI);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uni(rng);
    return v;
}

// Polynomial oracle: coefficient of each monomial in prod_b ((O xi)_b)^{k_b}.
std::map<std::vector<int>, double> expand_transformed(const Generator& g, const Eigen::MatrixXd& o) {
    const int dims = static_cast<int>(o.rows());
    std::map<std::vector<int>, double> poly;  // exponent tuple -> coefficient
    poly[std::vector<int>(dims, 0)] = 1.0;
    for (int b = 0; b < dims; ++b) {
        for (int rep = 0; rep < g.exponents[b]; ++rep) {
            std::map<std::vector<int>, double> next;
            for (const auto& [exps, coef] : poly)
                for (int a = 0; a < dims; ++a) {
                    if (o(b, a) == 0.0) continue;
                    std::vector<int> e = exps;
                    e[a] += 1;
                    next[e] += coef * o(b, a);
                }
            poly = std::move(next);
        }
    }
    return poly;
}

}  // namespace

TEST_CASE("clements building blocks match the printed matrices") {
    // m=2, theta arbitrary, phi=0 -> R(theta) exactly
    double theta = 0.37;
    Eigen::VectorXd th(1), ph(1);
    th << theta;
    ph << 0.0;
    BasisChange bc = clements_orthogonal(th, ph, 2);
    Eigen::MatrixXd r(4, 4);
    double c = std::cos(theta), s = std::sin(theta);
    // quadrature ordering (q1, q2, p1, p2)
    r << c, s, 0, 0, -s, c, 0, 0, 0, 0, c, s, 0, 0, -s, c;
    CHECK((bc.O - r).cwiseAbs().maxCoeff() < 1e-14);

    // theta = 0, phi = pi/2 -> Ph(pi/2)
    th << 0.0;
    ph << M_PI / 2;
    BasisChange ph_only = clements_orthogonal(th, ph, 2);
    Eigen::MatrixXd expect(4, 4);
    expect << 0, 0, 1, 0, 0, 1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 1;
    CHECK((ph_only.O - expect).cwiseAbs().maxCoeff() < 1e-14);

    // theta = phi = 0 -> identity
    ph << 0.0;
    CHECK((clements_orthogonal(th, ph, 2).O - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
          1e-14);

    CHECK_THROWS_AS(clements_orthogonal(Eigen::VectorXd::Zero(2), ph, 2), std::invalid_argument);
}

TEST_CASE("mesh output is orthogonal symplectic for random parameters") {
    std::mt19937_64 rng(2024);
    for (int m : {2, 3, 5}) {
        int count = basis_parameter_count(m);
        BasisChange bc = clements_orthogonal(random_angles(count, rng), random_angles(count, rng), m);
        Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2 * m, 2 * m);
        CHECK((bc.O.transpose() * bc.O - id).cwiseAbs().maxCoeff() < 1e-10);
        // symplectic: O J O^T = J with J the [q,p] form
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        for (int k = 0; k < m; ++k) {
            j(k, m + k) = 1;
            j(m + k, k) = -1;
        }
        CHECK((bc.O * j * bc.O.transpose() - j).cwiseAbs().maxCoeff() < 1e-10);
        // round trip through the complex unitary
        Eigen::MatrixXcd u = mode_unitary_from_quadrature(bc.O);
        CHECK((quadrature_rep(u) - bc.O).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("lift: identity, order-1 block, worked example") {
    GeneratorSet gens = build_generator_set(3, 2);
    Eigen::MatrixXd id_lift = lift_basis_change(Eigen::MatrixXd::Identity(4, 4), gens);
    CHECK((id_lift - Eigen::MatrixXd::Identity(gens.size(), gens.size())).cwiseAbs().maxCoeff() ==
          0.0);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0, 2 * M_PI);
    for (int trial = 0; trial < 20; ++trial) {
        double theta = uni(rng);
        Eigen::VectorXd th(1), ph(1);
        th << theta;
        ph << 0.0;
        Eigen::MatrixXd o = clements_orthogonal(th, ph, 2).O;
        Eigen::MatrixXd u = lift_basis_change(o, gens);

        // order-1 block equals O in the set's index convention
        std::vector<int> order1;
        for (std::size_t i = 0; i < gens.size(); ++i)
            if (gens[i].order() == 1) order1.push_back(static_cast<int>(i));
        REQUIRE(order1.size() == 4);
        // generator with single exponent at slot a corresponds to quadrature a
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                int slot_r = -1, slot_c = -1;
                for (int k = 0; k < 4; ++k) {
                    if (gens[order1[r]].exponents[k]) slot_r = k;
                    if (gens[order1[c]].exponents[k]) slot_c = k;
                }
                CHECK(u(order1[r], order1[c]) == doctest::Approx(o(slot_r, slot_c)).epsilon(1e-12));
            }

        // worked example: entry between S(q1^2 p1) and S(q1 p1 q2)
        int gi = -1, gl = -1;
        for (std::size_t k = 0; k < gens.size(); ++k) {
            if (gens[k].exponents == std::vector<int>{2, 0, 1, 0}) gi = static_cast<int>(k);
            if (gens[k].exponents == std::vector<int>{1, 1, 1, 0}) gl = static_cast<int>(k);
        }
        REQUIRE(gi >= 0);
        REQUIRE(gl >= 0);
        double expect = 2.0 * std::cos(theta) * std::cos(theta) * std::sin(theta);
        CHECK(std::abs(u(gi, gl) - expect) < 1e-10);
    }
}

TEST_CASE("lift order-2 block matches symbolic coefficient extraction") {
    GeneratorSet gens = build_generator_set(2, 2);
    Eigen::VectorXd th(1), ph(1);
    th << M_PI / 4;
    ph << 0.0;
    Eigen::MatrixXd o = clements_orthogonal(th, ph, 2).O;
    Eigen::MatrixXd u = lift_basis_change(o, gens);
    for (std::size_t i = 0; i < gens.size(); ++i) {
        auto poly = expand_transformed(gens[i], o);
        for (std::size_t l = 0; l < gens.size(); ++l) {
            double coef = 0.0;
            auto it = poly.find(gens[l].exponents);
            if (it != poly.end()) coef = it->second;
            if (gens[i].order() != gens[l].order()) coef = 0.0;
            CHECK(u(i, l) == doctest::Approx(coef).epsilon(1e-12));
        }
    }
}

TEST_CASE("lift composition homomorphism") {
    std::mt19937_64 rng(99);
    for (int m : {2, 3}) {
        GeneratorSet gens = build_generator_set(2, m);
        int count = basis_parameter_count(m);
        for (int trial = 0; trial < 4; ++trial) {
            Eigen::MatrixXd o1 =
                clements_orthogonal(random_angles(count, rng), random_angles(count, rng), m).O;
            Eigen::MatrixXd o2 =
                clements_orthogonal(random_angles(count, rng), random_angles(count, rng), m).O;
            Eigen::MatrixXd lhs = lift_basis_change(o1 * o2, gens);
            Eigen::MatrixXd rhs = lift_basis_change(o1, gens) * lift_basis_change(o2, gens);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("adjoint action consistency against the state simulator") {
    // <H_i'> on the original state equals sum_l U_il <H_l>, where the primed
    // expectation is taken in the physically transformed state.
    std::mt19937_64 rng(1234);
    GeneratorSet gens = build_generator_set(2, 2);
    PureState s = squeezed_vacuum({0.15, -0.1}, 14, 1e-8);
    s = subtract_photon(s, 0.9);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd th = random_angles(1, rng), ph = random_angles(1, rng);
        Eigen::MatrixXd o = clements_orthogonal(th, ph, 2).O;
        Eigen::MatrixXd u = lift_basis_change(o, gens);
        PureState moved = apply_passive_unitary(s, mode_unitary_from_quadrature(o));
        for (std::size_t i = 0; i < gens.size(); ++i) {
            double direct = expectation(moved, gens[i]);
            double lifted = 0.0;
            for (std::size_t l = 0; l < gens.size(); ++l)
                lifted += u(i, l) * expectation(s, gens[l]);
            CHECK(direct == doctest::Approx(lifted).epsilon(1e-7));
        }
    }
}

TEST_CASE("restrict_local") {
    GeneratorSet gens = build_generator_set(2, 2);
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(14, 14);
    Partition split = parse_partition("1|2", 2);
    std::vector<int> index_map;
    Eigen::MatrixXd reduced = restrict_local(m, gens, split, &index_map);
    CHECK(reduced.rows() == 10);
    CHECK(index_map.size() == 10);
    for (std::size_t r = 0; r < index_map.size(); ++r)
        CHECK(reduced(r, r) == m(index_map[r], index_map[r]));

    GeneratorSet g1 = build_generator_set(1, 3);
    Eigen::MatrixXd m6 = Eigen::MatrixXd::Random(6, 6);
    CHECK(restrict_local(m6, g1, singleton_partition(3)).rows() == 6);  // all order-1 local

    Partition whole = parse_partition("12", 2);
    CHECK(restrict_local(m, gens, whole).rows() == 14);  // single block: unchanged

    CHECK_THROWS_AS(restrict_local(m6, gens, split), std::invalid_argument);
}
