#include "mw/witness.hpp"

#include <cmath>

namespace mw {

namespace {

void check_gens(const GeneratorSet& gens, int modes) {
    if (gens.modes != modes) throw std::invalid_argument("witness: generator set mode mismatch");
    if (2 * gens.max_order > kMaxMomentOrder)
        throw std::invalid_argument("witness: generator order exceeds moment limit");
}

// Means <H_i> and symmetrized Gram Re<H_i H_j> for a pure state.
void pure_moments(const PureState& state, const GeneratorSet& gens, Eigen::VectorXd& means,
                  Eigen::MatrixXd& gram) {
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());
    std::vector<PureState> applied(n);
    parallel_for(n, [&](std::size_t i) { applied[i] = apply_generator(state, gens[i]); });
    means.resize(n);
    gram.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) means[i] = state.amp.dot(applied[i].amp).real();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            double v = applied[i].amp.dot(applied[j].amp).real();
            gram(i, j) = v;
            gram(j, i) = v;
        }
}

struct MixedMoments {
    Eigen::VectorXd means;
    Eigen::MatrixXd gram;      // Re Tr(rho H_i H_j)
    Eigen::MatrixXd qfi;
};

MixedMoments mixed_moments(const DensityState& state, const GeneratorSet& gens, double pair_floor) {
    const Eigen::Index n = static_cast<Eigen::Index>(gens.size());
    const Eigen::Index dim = state.dim();
    std::vector<EigenPair> spec = full_spectrum(state);

    // H_i applied to every eigenvector, stored as dim x dim matrices (columns
    // indexed like the eigenbasis). Memory is bounded by the density guard.
    Eigen::MatrixXcd vecs(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) vecs.col(k) = spec[k].vec;
    std::vector<Eigen::MatrixXcd> applied(n);
    parallel_for(n, [&](std::size_t i) {
        PureState column;
        column.modes = state.modes;
        column.cutoff = state.cutoff;
        Eigen::MatrixXcd out = vecs;
        for (Eigen::Index k = 0; k < dim; ++k) {
            column.amp = out.col(k);
            column = apply_generator(column, gens[i]);
            out.col(k) = column.amp;
        }
        applied[i] = std::move(out);
    });

    MixedMoments mm;
    mm.means.resize(n);
    mm.gram.resize(n, n);
    Eigen::VectorXd p(dim);
    for (Eigen::Index k = 0; k < dim; ++k) p[k] = spec[k].p;
    for (Eigen::Index i = 0; i < n; ++i) {
        double mean = 0.0;
        for (Eigen::Index k = 0; k < dim; ++k)
            mean += p[k] * vecs.col(k).dot(applied[i].col(k)).real();
        mm.means[i] = mean;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            double g = 0.0;
            for (Eigen::Index k = 0; k < dim; ++k)
                g += p[k] * applied[i].col(k).dot(applied[j].col(k)).real();
            mm.gram(i, j) = g;
            mm.gram(j, i) = g;
        }

    // QFI double sum with weights 2 (p_k - p_l)^2 / (p_k + p_l); the factor 2
    // is fixed by the pure-state limit Q = 4 Var (rank-1 spectrum: the
    // support/kernel pairs carry weight 2 each).
    std::vector<Eigen::MatrixXcd> htilde(n);
    parallel_for(n, [&](std::size_t i) { htilde[i] = vecs.adjoint() * applied[i]; });
    Eigen::MatrixXd w(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k)
        for (Eigen::Index l = 0; l < dim; ++l) {
            double s = p[k] + p[l];
            w(k, l) = (s > pair_floor) ? 2.0 * (p[k] - p[l]) * (p[k] - p[l]) / s : 0.0;
        }
    Eigen::MatrixXd sw = w.cwiseSqrt();
    for (Eigen::Index i = 0; i < n; ++i) htilde[i].array() *= sw.array().cast<cxd>();
    mm.qfi.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            double q = (htilde[i].array() * htilde[j].array().conjugate()).sum().real();
            mm.qfi(i, j) = q;
            mm.qfi(j, i) = q;
        }
    return mm;
}

Eigen::MatrixXd zero_cross_block(const Eigen::MatrixXd& gamma_local, const std::vector<int>& block) {
    Eigen::MatrixXd out = gamma_local;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            if (block[i] != block[j]) out(i, j) = 0.0;
    return out;
}

std::vector<int> local_blocks(const GeneratorSet& gens, const Partition& p,
                              const std::vector<int>& local_idx) {
    std::vector<int> blocks;
    blocks.reserve(local_idx.size());
    for (int idx : local_idx) blocks.push_back(locality_of(gens[idx], p).block);
    return blocks;
}

}  // namespace

Eigen::MatrixXd qfi_matrix(const PureState& state, const GeneratorSet& gens) {
    check_gens(gens, state.modes);
    Eigen::VectorXd means;
    Eigen::MatrixXd gram;
    pure_moments(state, gens, means, gram);
    return 4.0 * (gram - means * means.transpose());
}

Eigen::MatrixXd qfi_matrix(const DensityState& state, const GeneratorSet& gens, double pair_floor) {
    check_gens(gens, state.modes);
    return mixed_moments(state, gens, pair_floor).qfi;
}

Eigen::MatrixXd cov_matrix(const PureState& state, const GeneratorSet& gens) {
    check_gens(gens, state.modes);
    Eigen::VectorXd means;
    Eigen::MatrixXd gram;
    pure_moments(state, gens, means, gram);
    return gram - means * means.transpose();
}

Eigen::MatrixXd cov_matrix(const DensityState& state, const GeneratorSet& gens) {
    check_gens(gens, state.modes);
    MixedMoments mm = mixed_moments(state, gens, 1e-10);
    return mm.gram - mm.means * mm.means.transpose();
}

namespace {

template <typename State>
Eigen::MatrixXd product_cov_impl(const State& state, const GeneratorSet& gens, const Partition& p) {
    p.validate();
    std::vector<int> blocks;
    blocks.reserve(gens.size());
    for (const auto& g : gens.gens) {
        LocalityTag tag = locality_of(g, p);
        if (!tag.local)
            throw std::invalid_argument("product_cov: non-local generator present");
        blocks.push_back(tag.block);
    }
    Eigen::MatrixXd gamma = cov_matrix(state, gens);
    return zero_cross_block(gamma, blocks);
}

}  // namespace

Eigen::MatrixXd product_cov(const PureState& state, const GeneratorSet& gens, const Partition& p) {
    return product_cov_impl(state, gens, p);
}

Eigen::MatrixXd product_cov(const DensityState& state, const GeneratorSet& gens, const Partition& p) {
    return product_cov_impl(state, gens, p);
}

double witness_value(const Eigen::MatrixXd& q_local, const Eigen::MatrixXd& gamma_pi) {
    if (q_local.rows() != gamma_pi.rows() || q_local.cols() != gamma_pi.cols())
        throw std::invalid_argument("witness_value: dimension mismatch");
    Eigen::MatrixXd diff = q_local - 4.0 * gamma_pi;
    diff = 0.5 * (diff + diff.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double WitnessContext::eval_with_O(const Eigen::MatrixXd& O) const {
    Eigen::MatrixXd u = lift_basis_change(O, gens);
    Eigen::MatrixXd q_rot = u * q_full * u.transpose();
    Eigen::MatrixXd g_rot = u * gamma_full * u.transpose();
    const Eigen::Index n = static_cast<Eigen::Index>(local_idx.size());
    Eigen::MatrixXd q_loc(n, n), g_loc(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            q_loc(r, c) = q_rot(local_idx[r], local_idx[c]);
            g_loc(r, c) = g_rot(local_idx[r], local_idx[c]);
        }
    return witness_value(q_loc, zero_cross_block(g_loc, local_block));
}

double WitnessContext::eval(const Eigen::VectorXd& theta_phi) const {
    const int count = basis_parameter_count(gens.modes);
    if (theta_phi.size() != 2 * count)
        throw std::invalid_argument("witness eval: parameter count mismatch");
    BasisChange bc = clements_orthogonal(theta_phi.head(count), theta_phi.tail(count), gens.modes);
    return eval_with_O(bc.O);
}

double WitnessContext::eval_frobenius(const Eigen::VectorXd& theta_phi) const {
    const int count = basis_parameter_count(gens.modes);
    BasisChange bc = clements_orthogonal(theta_phi.head(count), theta_phi.tail(count), gens.modes);
    Eigen::MatrixXd u = lift_basis_change(bc.O, gens);
    Eigen::MatrixXd q_rot = u * q_full * u.transpose();
    Eigen::MatrixXd g_rot = u * gamma_full * u.transpose();
    const Eigen::Index n = static_cast<Eigen::Index>(local_idx.size());
    double acc = 0.0;
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            double g_pi = (local_block[r] == local_block[c]) ? g_rot(local_idx[r], local_idx[c]) : 0.0;
            double d = q_rot(local_idx[r], local_idx[c]) - 4.0 * g_pi;
            acc += d * d;
        }
    return acc;
}

namespace {

WitnessContext make_context_common(const GeneratorSet& gens, const Partition& partition) {
    partition.validate();
    if (partition.modes != gens.modes)
        throw std::invalid_argument("witness context: partition mode mismatch");
    WitnessContext ctx;
    ctx.gens = gens;
    ctx.partition = partition;
    ctx.local_idx = gens.local_indices(partition);
    ctx.local_block = local_blocks(gens, partition, ctx.local_idx);
    return ctx;
}

}  // namespace

WitnessContext make_witness_context(const PureState& state, const GeneratorSet& gens,
                                    const Partition& partition) {
    check_gens(gens, state.modes);
    WitnessContext ctx = make_context_common(gens, partition);
    Eigen::VectorXd means;
    Eigen::MatrixXd gram;
    pure_moments(state, gens, means, gram);
    ctx.gamma_full = gram - means * means.transpose();
    ctx.q_full = 4.0 * ctx.gamma_full;
    return ctx;
}

WitnessContext make_witness_context(const DensityState& state, const GeneratorSet& gens,
                                    const Partition& partition, double pair_floor) {
    check_gens(gens, state.modes);
    WitnessContext ctx = make_context_common(gens, partition);
    MixedMoments mm = mixed_moments(state, gens, pair_floor);
    ctx.gamma_full = mm.gram - mm.means * mm.means.transpose();
    ctx.q_full = mm.qfi;
    return ctx;
}

WitnessContext make_witness_context(const Eigen::MatrixXd& q_full, const Eigen::MatrixXd& gamma_full,
                                    const GeneratorSet& gens, const Partition& partition) {
    WitnessContext ctx = make_context_common(gens, partition);
    if (q_full.rows() != static_cast<Eigen::Index>(gens.size()) || q_full.rows() != gamma_full.rows())
        throw std::invalid_argument("witness context: matrix size mismatch");
    ctx.q_full = q_full;
    ctx.gamma_full = gamma_full;
    return ctx;
}

double witness_in_basis(const WitnessContext& ctx, const Eigen::VectorXd& theta_phi) {
    return ctx.eval(theta_phi);
}

Eigen::MatrixXd WitnessReport::realized_O(int modes) const {
    const int count = basis_parameter_count(modes);
    BasisChange bc = clements_orthogonal(argmin.head(count), argmin.tail(count), modes);
    if (seed_transform.size() == 0) return bc.O;
    return bc.O * seed_transform;
}

WitnessReport mode_intrinsic_witness(const WitnessContext& ctx, const OptimizerConfig& cfg,
                                     const std::vector<Eigen::MatrixXd>& seed_transforms) {
    const int dim = 2 * basis_parameter_count(ctx.gens.modes);
    OptimizerConfig main_cfg = cfg;
    if (dim > 0) {
        // Smooth pre-pass: the Frobenius surrogate shares the E = 0 zero set
        // for pure states and is easier to descend; its minimizer seeds the
        // lambda_max run.
        OptimizerConfig pre = cfg;
        pre.seeds.clear();
        pre.ga_restarts = 1;
        pre.generations = std::max(40, cfg.generations / 4);
        pre.restarts = std::max(2, cfg.restarts / 2);
        pre.budget = std::max(2000, cfg.budget / 8);
        OptResult smooth =
            minimize([&ctx](const Eigen::VectorXd& v) { return ctx.eval_frobenius(v); }, dim, pre);
        main_cfg.seeds.push_back(smooth.argmin);
    }
    OptResult r = minimize([&ctx](const Eigen::VectorXd& v) { return ctx.eval(v); }, dim, main_cfg);
    Eigen::MatrixXd winning_transform;  // empty = plain mesh

    // Local refinements around the provided transforms; best result wins.
    const int count = basis_parameter_count(ctx.gens.modes);
    for (const auto& s : seed_transforms) {
        auto composed = [&](const Eigen::VectorXd& x) {
            BasisChange bc = clements_orthogonal(x.head(count), x.tail(count), ctx.gens.modes);
            return ctx.eval_with_O(bc.O * s);
        };
        auto composed_frob = [&](const Eigen::VectorXd& x) {
            BasisChange bc = clements_orthogonal(x.head(count), x.tail(count), ctx.gens.modes);
            Eigen::MatrixXd u = lift_basis_change(bc.O * s, ctx.gens);
            Eigen::MatrixXd q_rot = u * ctx.q_full * u.transpose();
            Eigen::MatrixXd g_rot = u * ctx.gamma_full * u.transpose();
            double acc = 0.0;
            const Eigen::Index n = static_cast<Eigen::Index>(ctx.local_idx.size());
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < n; ++b) {
                    double g_pi = (ctx.local_block[a] == ctx.local_block[b])
                                      ? g_rot(ctx.local_idx[a], ctx.local_idx[b])
                                      : 0.0;
                    double d = q_rot(ctx.local_idx[a], ctx.local_idx[b]) - 4.0 * g_pi;
                    acc += d * d;
                }
            return acc;
        };
        OptResult lf = nelder_mead(composed_frob, Eigen::VectorXd::Zero(dim), 0.1, cfg.tolerance,
                                   std::max(2000, cfg.budget / 20));
        OptResult l1 = nelder_mead(composed, lf.argmin, 0.05, cfg.tolerance,
                                   std::max(2000, cfg.budget / 20));
        OptResult l2 = nelder_mead(composed, Eigen::VectorXd::Zero(dim), 0.1, cfg.tolerance,
                                   std::max(2000, cfg.budget / 20));
        for (const OptResult* lr : {&l1, &l2}) {
            if (lr->value < r.value) {
                r.value = lr->value;
                r.argmin = lr->argmin;
                winning_transform = s;
                r.trace.push_back({lr->argmin, lr->value, "seed-transform"});
            }
            r.evaluations += lr->evaluations;
        }
    }
    WitnessReport rep;
    rep.seed_transform = winning_transform;
    rep.w_q = r.value;
    rep.sampled_min = r.grid_minimum;
    rep.argmin = r.argmin;
    rep.order = ctx.gens.max_order;
    rep.partition = ctx.partition.to_string();
    rep.converged = r.converged;
    rep.entangled_witnessed = r.value > kWitnessPositivityFloor;
    rep.evaluations = r.evaluations;
    rep.restarts = r.trace;
    return rep;
}

std::vector<WitnessReport> witness_table(const Eigen::MatrixXd& q_full,
                                         const Eigen::MatrixXd& gamma_full, const GeneratorSet& gens,
                                         const std::vector<Partition>& partitions,
                                         const OptimizerConfig& cfg,
                                         const std::vector<Eigen::MatrixXd>& seed_transforms) {
    // fine to coarse: more blocks first
    std::vector<std::size_t> order(partitions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return partitions[a].blocks.size() > partitions[b].blocks.size();
    });

    std::vector<WitnessReport> out(partitions.size());
    std::vector<std::pair<std::vector<int>, WitnessReport>> done;  // size profile -> report
    std::vector<Eigen::VectorXd> seeds;
    std::vector<Eigen::MatrixXd> transforms = seed_transforms;
    for (std::size_t oi : order) {
        const Partition& p = partitions[oi];
        std::vector<int> profile = p.size_profile();
        bool reused = false;
        for (const auto& d : done)
            if (d.first == profile) {
                out[oi] = d.second;
                out[oi].partition = p.to_string();
                reused = true;
                break;
            }
        if (reused) continue;
        WitnessContext ctx = make_witness_context(q_full, gamma_full, gens, p);
        OptimizerConfig run_cfg = cfg;
        run_cfg.seeds.insert(run_cfg.seeds.end(), seeds.begin(), seeds.end());
        WitnessReport rep = mode_intrinsic_witness(ctx, run_cfg, transforms);
        if (rep.seed_transform.size() == 0) {
            seeds.push_back(rep.argmin);
        } else {
            transforms.push_back(rep.realized_O(gens.modes));
        }
        out[oi] = rep;
        done.push_back({profile, rep});
    }

    // Reconciliation: a coarsening can never exceed any of its refinements,
    // so evaluate each partition at every other minimizer and keep the best.
    for (std::size_t b = 0; b < partitions.size(); ++b) {
        WitnessContext ctx = make_witness_context(q_full, gamma_full, gens, partitions[b]);
        for (std::size_t a = 0; a < partitions.size(); ++a) {
            if (a == b) continue;
            double candidate = ctx.eval_with_O(out[a].realized_O(gens.modes));
            if (candidate < out[b].w_q) {
                out[b].w_q = candidate;
                out[b].argmin = out[a].argmin;
                out[b].seed_transform = out[a].seed_transform;
                out[b].entangled_witnessed = candidate > kWitnessPositivityFloor;
            }
        }
    }
    return out;
}

}  // namespace mw
