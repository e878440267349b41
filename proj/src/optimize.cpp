#include "mw/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mw {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

struct Best {
    Eigen::VectorXd point;
    double value = std::numeric_limits<double>::infinity();
    void offer(const Eigen::VectorXd& p, double v) {
        if (v < value || (v == value && (point.size() == 0 || lex_less(p, point)))) {
            value = v;
            point = p;
        }
    }
};
}  // namespace

void OptimizerConfig::validate() const {
    if (budget <= 0) throw std::invalid_argument("optimizer: budget must be > 0");
    if (tolerance <= 0) throw std::invalid_argument("optimizer: tolerance must be > 0");
}

Eigen::VectorXd wrap_angles(const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out[i] = std::fmod(out[i], kTwoPi);
        if (out[i] < 0) out[i] += kTwoPi;
    }
    return out;
}

OptResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                      const Eigen::VectorXd& start, double step, double tolerance, int max_evals) {
    const int n = static_cast<int>(start.size());
    const double rho = 1.0, chi = 2.0, gamma = 0.5, sigma = 0.5;
    long long evals = 0;
    auto f = [&](const Eigen::VectorXd& x) {
        ++evals;
        return objective(wrap_angles(x));
    };

    std::vector<std::pair<double, Eigen::VectorXd>> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({f(start), start});
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v = start;
        v[i] += step;
        simplex.push_back({f(v), v});
    }

    auto sort_simplex = [&] {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
    };
    sort_simplex();

    bool converged = false;
    while (evals < max_evals) {
        double spread = simplex.back().first - simplex.front().first;
        double geom = 0.0;
        for (int i = 0; i < n; ++i)
            geom = std::max(geom, (simplex[i + 1].second - simplex[0].second).cwiseAbs().maxCoeff());
        if (spread < tolerance && geom < std::sqrt(tolerance)) {
            converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += simplex[i].second;
        centroid /= n;

        Eigen::VectorXd xr = centroid + rho * (centroid - simplex[n].second);
        double fr = f(xr);
        if (fr < simplex[0].first) {
            Eigen::VectorXd xe = centroid + chi * (xr - centroid);
            double fe = f(xe);
            simplex[n] = (fe < fr) ? std::make_pair(fe, xe) : std::make_pair(fr, xr);
        } else if (fr < simplex[n - 1].first) {
            simplex[n] = {fr, xr};
        } else {
            bool outside = fr < simplex[n].first;
            Eigen::VectorXd xc;
            if (outside) xc = centroid + gamma * (xr - centroid);
            else xc = centroid - gamma * (centroid - simplex[n].second);
            double fc = f(xc);
            if (fc < std::min(fr, simplex[n].first)) {
                simplex[n] = {fc, xc};
            } else {
                for (int i = 1; i <= n; ++i) {
                    Eigen::VectorXd xs = simplex[0].second + sigma * (simplex[i].second - simplex[0].second);
                    simplex[i] = {f(xs), xs};
                }
            }
        }
        sort_simplex();
    }
    sort_simplex();

    OptResult res;
    res.argmin = wrap_angles(simplex[0].second);
    res.value = simplex[0].first;
    res.converged = converged;
    res.evaluations = evals;
    return res;
}

namespace {

OptResult minimize_grid_simplex(const std::function<double(const Eigen::VectorXd&)>& objective,
                                int dim, const OptimizerConfig& cfg) {
    int per_dim = cfg.grid_per_dim;
    while (per_dim > 2 && std::pow(static_cast<double>(per_dim), dim) > cfg.grid_cap) --per_dim;
    long long total = 1;
    for (int i = 0; i < dim; ++i) total *= per_dim;

    std::vector<double> values(total);
    std::vector<Eigen::VectorXd> points(total);
    parallel_for(total, [&](std::size_t idx) {
        Eigen::VectorXd p(dim);
        std::size_t rem = idx;
        for (int k = dim - 1; k >= 0; --k) {
            p[k] = (rem % per_dim) * (kTwoPi / per_dim);
            rem /= per_dim;
        }
        points[idx] = p;
        values[idx] = objective(p);
    });

    std::vector<long long> order(total);
    for (long long i = 0; i < total; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](long long a, long long b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return lex_less(points[a], points[b]);
    });

    OptResult res;
    res.evaluations = total;
    res.grid_minimum = values[order[0]];
    Best best;
    best.offer(points[order[0]], values[order[0]]);
    for (long long i = 0; i < std::min<long long>(total, 16); ++i)
        res.trace.push_back({points[order[i]], values[order[i]], "grid"});

    const int restarts = std::min<long long>(cfg.restarts, total);
    const double step = 0.5 * kTwoPi / per_dim;
    const int per_restart_budget =
        std::max(100, static_cast<int>((cfg.budget - total) / std::max(1, restarts)));
    std::vector<Eigen::VectorXd> starts;
    for (long long r = 0; r < restarts; ++r) starts.push_back(points[order[r]]);
    for (const auto& s : cfg.seeds)
        if (s.size() == dim) starts.push_back(wrap_angles(s));
    std::vector<OptResult> locals(starts.size());
    parallel_for(starts.size(), [&](std::size_t r) {
        locals[r] = nelder_mead(objective, starts[r], step, cfg.tolerance, per_restart_budget);
    });
    bool all_converged = true;
    for (const auto& l : locals) {
        best.offer(l.argmin, l.value);
        res.evaluations += l.evaluations;
        res.trace.push_back({l.argmin, l.value, "restart"});
        all_converged = all_converged && l.converged;
    }
    res.argmin = best.point;
    res.value = best.value;
    res.converged = all_converged;
    return res;
}

OptResult minimize_genetic(const std::function<double(const Eigen::VectorXd&)>& objective, int dim,
                           const OptimizerConfig& cfg) {
    Best best;
    OptResult res;
    for (int run = 0; run < std::max(1, cfg.ga_restarts); ++run) {
        std::mt19937_64 rng(derive_seed(cfg.seed, run));
        std::uniform_real_distribution<double> uni(0.0, kTwoPi);
        std::normal_distribution<double> gauss(0.0, cfg.mutation_sigma);

        const int pop_n = cfg.population;
        std::vector<Eigen::VectorXd> pop(pop_n, Eigen::VectorXd(dim));
        for (auto& ind : pop)
            for (int k = 0; k < dim; ++k) ind[k] = uni(rng);
        pop[0].setZero();  // include the preparation basis as a seed point
        for (std::size_t s = 0; s < cfg.seeds.size() && s + 1 < static_cast<std::size_t>(pop_n); ++s)
            if (cfg.seeds[s].size() == dim) pop[s + 1] = wrap_angles(cfg.seeds[s]);

        std::vector<double> fit(pop_n);
        auto evaluate = [&] {
            parallel_for(pop_n, [&](std::size_t i) { fit[i] = objective(pop[i]); });
            res.evaluations += pop_n;
        };
        evaluate();

        std::vector<int> order(pop_n);
        for (int g = 0; g < cfg.generations; ++g) {
            for (int i = 0; i < pop_n; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                if (fit[a] != fit[b]) return fit[a] < fit[b];
                return lex_less(pop[a], pop[b]);
            });
            best.offer(pop[order[0]], fit[order[0]]);
            if (res.evaluations >= cfg.budget) break;

            std::vector<Eigen::VectorXd> next;
            next.reserve(pop_n);
            for (int e = 0; e < cfg.elite && e < pop_n; ++e) next.push_back(pop[order[e]]);
            std::uniform_int_distribution<int> pick(0, pop_n - 1);
            while (static_cast<int>(next.size()) < pop_n) {
                auto tournament = [&] {
                    int a = pick(rng), b = pick(rng);
                    return fit[a] <= fit[b] ? a : b;
                };
                const Eigen::VectorXd& pa = pop[tournament()];
                const Eigen::VectorXd& pb = pop[tournament()];
                Eigen::VectorXd child(dim);
                for (int k = 0; k < dim; ++k) {
                    child[k] = (rng() & 1) ? pa[k] : pb[k];
                    child[k] += gauss(rng);
                }
                next.push_back(wrap_angles(child));
            }
            pop = std::move(next);
            evaluate();
        }
        for (int i = 0; i < pop_n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (fit[a] != fit[b]) return fit[a] < fit[b];
            return lex_less(pop[a], pop[b]);
        });
        for (int i = 0; i < pop_n; ++i) best.offer(pop[order[i]], fit[order[i]]);
        res.trace.push_back({best.point, best.value, "ga"});
        // polish the top few survivors of this run, not only the champion
        const int polish_count = std::min(3, pop_n);
        bool conv = true;
        for (int t = 0; t < polish_count; ++t) {
            OptResult polish = nelder_mead(objective, pop[order[t]], 0.08, cfg.tolerance,
                                           std::max(500, cfg.budget / 20));
            best.offer(polish.argmin, polish.value);
            res.evaluations += polish.evaluations;
            conv = conv && polish.converged;
            res.trace.push_back({polish.argmin, polish.value, "polish"});
        }
        res.converged = conv;
    }
    res.grid_minimum = best.value;
    res.argmin = best.point;
    res.value = best.value;
    return res;
}

}  // namespace

OptResult minimize(const std::function<double(const Eigen::VectorXd&)>& objective, int dim,
                   const OptimizerConfig& cfg) {
    cfg.validate();
    if (dim == 0) {
        OptResult res;
        res.argmin = Eigen::VectorXd(0);
        res.value = objective(res.argmin);
        res.converged = true;
        res.evaluations = 1;
        return res;
    }
    auto wrapped = [&objective](const Eigen::VectorXd& v) { return objective(wrap_angles(v)); };
    if (cfg.strategy == OptStrategy::Genetic) return minimize_genetic(wrapped, dim, cfg);
    return minimize_grid_simplex(wrapped, dim, cfg);
}

}  // namespace mw
