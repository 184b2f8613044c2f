#include "iscm/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "iscm/metrics.hpp"

namespace iscm {

namespace {
constexpr int kGridSize = 100;
constexpr double kGridDecades = 3.0;
constexpr double kCoordinateTolerance = 1e-8;
constexpr int kMaxSweeps = 10000;
}  // namespace

SparsePath lasso_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = x.cols();
    if (x.rows() != n) throw std::invalid_argument("lasso_path: row count mismatch");
    if (n < 2) throw std::invalid_argument("lasso_path: need n >= 2");
    if (!y.allFinite() || !x.allFinite()) throw std::invalid_argument("lasso_path: non-finite input");

    const Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::MatrixXd xc = x;
    for (Eigen::Index j = 0; j < p; ++j) xc.col(j).array() -= x.col(j).mean();
    Eigen::VectorXd col_scale(p);  // X_j^T X_j / n
    for (Eigen::Index j = 0; j < p; ++j) col_scale(j) = xc.col(j).squaredNorm() / static_cast<double>(n);

    double lambda_max = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        lambda_max = std::max(lambda_max, std::abs(xc.col(j).dot(yc)) / static_cast<double>(n));

    SparsePath path;
    if (p == 0 || lambda_max <= 0.0) {
        path.lambdas = Eigen::VectorXd::Constant(1, lambda_max);
        path.coefficients = Eigen::MatrixXd::Zero(p, 1);
        path.bic = Eigen::VectorXd::Constant(
            1, static_cast<double>(n) * std::log(std::max(yc.squaredNorm() / static_cast<double>(n), 1e-300)));
        return path;
    }

    path.lambdas.resize(kGridSize);
    for (int g = 0; g < kGridSize; ++g)
        path.lambdas(g) = lambda_max * std::pow(10.0, -kGridDecades * g / (kGridSize - 1));
    path.coefficients.resize(p, kGridSize);
    path.bic.resize(kGridSize);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = yc;
    for (int g = 0; g < kGridSize; ++g) {
        const double lambda = path.lambdas(g);
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (col_scale(j) <= 0.0) continue;
                const double old = beta(j);
                const double rho = xc.col(j).dot(residual) / static_cast<double>(n) + col_scale(j) * old;
                double next = 0.0;
                if (rho > lambda)
                    next = (rho - lambda) / col_scale(j);
                else if (rho < -lambda)
                    next = (rho + lambda) / col_scale(j);
                if (next != old) {
                    residual -= (next - old) * xc.col(j);
                    beta(j) = next;
                    max_change = std::max(max_change, std::abs(next - old));
                }
            }
            if (max_change < kCoordinateTolerance) break;
        }
        path.coefficients.col(g) = beta;
        const double rss = residual.squaredNorm();
        int nonzero = 0;
        for (Eigen::Index j = 0; j < p; ++j)
            if (beta(j) != 0.0) ++nonzero;
        path.bic(g) = static_cast<double>(n) * std::log(std::max(rss / static_cast<double>(n), 1e-300)) +
                      nonzero * std::log(static_cast<double>(n));
    }
    return path;
}

LassoSelection lasso_bic_select(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    const SparsePath path = lasso_path(y, x);
    Eigen::Index best = 0;
    path.bic.minCoeff(&best);
    LassoSelection selection;
    selection.coefficients = path.coefficients.col(best);
    selection.lambda = path.lambdas(best);
    selection.bic = path.bic(best);
    for (Eigen::Index j = 0; j < selection.coefficients.size(); ++j)
        if (selection.coefficients(j) != 0.0) selection.active.push_back(static_cast<int>(j));
    return selection;
}

std::string to_string(SortCriterion criterion) {
    switch (criterion) {
        case SortCriterion::Var: return "var";
        case SortCriterion::R2: return "r2";
        case SortCriterion::Random: return "random";
    }
    return "unknown";
}

Dag sort_n_regress(const Dataset& ds, SortCriterion criterion, RandomStream& rng) {
    const int d = ds.d();
    if (d < 2) throw std::invalid_argument("sort_n_regress: need at least two variables");
    std::vector<int> order(static_cast<std::size_t>(d));
    if (criterion == SortCriterion::Random) {
        order = rng.permutation(d);
    } else {
        Eigen::VectorXd statistic(d);
        if (criterion == SortCriterion::Var) {
            for (int c = 0; c < d; ++c) {
                const double mean = ds.values.col(c).mean();
                statistic(c) = (ds.values.col(c).array() - mean).square().sum() / static_cast<double>(ds.n());
            }
        } else {
            statistic = r2_coefficients(ds);
        }
        for (int c = 0; c < d; ++c) order[static_cast<std::size_t>(c)] = c;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (statistic(a) != statistic(b)) return statistic(a) < statistic(b);
            return a < b;
        });
    }

    std::vector<Edge> edges;
    for (int k = 1; k < d; ++k) {
        const int target = order[static_cast<std::size_t>(k)];
        Eigen::MatrixXd predecessors(ds.n(), k);
        for (int j = 0; j < k; ++j) predecessors.col(j) = ds.values.col(order[static_cast<std::size_t>(j)]);
        const LassoSelection selection = lasso_bic_select(ds.values.col(target), predecessors);
        for (int j : selection.active) edges.emplace_back(order[static_cast<std::size_t>(j)], target);
    }
    return Dag(d, std::move(edges));
}

namespace {

struct PartialGraph {
    int d = 0;
    std::set<Edge> directed;
    std::set<Edge> undirected;  // normalized (min, max)

    bool adjacent(int a, int b) const {
        return directed.count({a, b}) || directed.count({b, a}) ||
               undirected.count({std::min(a, b), std::max(a, b)});
    }
};

void meek1_closure(PartialGraph& g) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [a, b] : g.directed) {
            std::vector<Edge> to_orient;
            for (const auto& e : g.undirected) {
                const int c = e.first == b ? e.second : (e.second == b ? e.first : -1);
                if (c < 0 || c == a || g.adjacent(a, c)) continue;
                to_orient.push_back(e);
            }
            for (const auto& e : to_orient) {
                g.undirected.erase(e);
                g.directed.emplace(b, e.first == b ? e.second : e.first);
                changed = true;
            }
            if (changed) break;
        }
    }
}

// Connected components of the undirected part; each returned as a sorted
// vertex list.
std::vector<std::vector<int>> undirected_components(const PartialGraph& g) {
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(g.d));
    for (const auto& [a, b] : g.undirected) {
        adjacency[static_cast<std::size_t>(a)].push_back(b);
        adjacency[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<char> seen(static_cast<std::size_t>(g.d), 0);
    std::vector<std::vector<int>> components;
    for (int s = 0; s < g.d; ++s) {
        if (seen[static_cast<std::size_t>(s)] || adjacency[static_cast<std::size_t>(s)].empty()) continue;
        std::vector<int> component;
        std::vector<int> stack{s};
        seen[static_cast<std::size_t>(s)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            component.push_back(v);
            for (int u : adjacency[static_cast<std::size_t>(v)]) {
                if (!seen[static_cast<std::size_t>(u)]) {
                    seen[static_cast<std::size_t>(u)] = 1;
                    stack.push_back(u);
                }
            }
        }
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
    }
    return components;
}

// Farthest vertex from `start` in the undirected subtree, with the path to
// it; ties break on smaller vertex index via sorted adjacency.
std::vector<int> farthest_path(const PartialGraph& g, const std::vector<int>& component, int start) {
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(g.d));
    for (const auto& [a, b] : g.undirected) {
        adjacency[static_cast<std::size_t>(a)].push_back(b);
        adjacency[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& list : adjacency) std::sort(list.begin(), list.end());
    std::vector<int> parent(static_cast<std::size_t>(g.d), -2);
    std::vector<int> depth(static_cast<std::size_t>(g.d), -1);
    std::vector<int> queue{start};
    parent[static_cast<std::size_t>(start)] = -1;
    depth[static_cast<std::size_t>(start)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int v = queue[head];
        for (int u : adjacency[static_cast<std::size_t>(v)]) {
            if (parent[static_cast<std::size_t>(u)] != -2) continue;
            parent[static_cast<std::size_t>(u)] = v;
            depth[static_cast<std::size_t>(u)] = depth[static_cast<std::size_t>(v)] + 1;
            queue.push_back(u);
        }
    }
    int best = start;
    for (int v : component)
        if (depth[static_cast<std::size_t>(v)] > depth[static_cast<std::size_t>(best)]) best = v;
    std::vector<int> path;
    for (int v = best; v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<int> longest_undirected_chain(const PartialGraph& g, const std::vector<int>& component) {
    const std::vector<int> first = farthest_path(g, component, component.front());
    return farthest_path(g, component, first.back());
}

}  // namespace

Cpdag orient_forest_from_covariance(const Cpdag& cpdag, const Eigen::MatrixXd& sigma,
                                    double min_abs_weight, double tie_tolerance) {
    if (!(min_abs_weight > 1.0))
        throw std::invalid_argument("orient_forest_from_covariance: need min_abs_weight > 1");
    if (sigma.rows() != cpdag.d || sigma.cols() != cpdag.d)
        throw std::invalid_argument("orient_forest_from_covariance: covariance shape mismatch");
    std::vector<Edge> skeleton = cpdag.directed;
    skeleton.insert(skeleton.end(), cpdag.undirected.begin(), cpdag.undirected.end());
    {
        std::vector<Edge> normalized;
        normalized.reserve(skeleton.size());
        for (const auto& [a, b] : skeleton) normalized.emplace_back(std::min(a, b), std::max(a, b));
        std::sort(normalized.begin(), normalized.end());
        if (std::adjacent_find(normalized.begin(), normalized.end()) != normalized.end())
            throw std::invalid_argument("orient_forest_from_covariance: duplicate skeleton edge");
        Dag skeleton_check(cpdag.d, normalized);
        if (!is_forest(skeleton_check))
            throw std::invalid_argument("orient_forest_from_covariance: not a forest");
    }
    for (const auto& [a, b] : skeleton)
        if (sigma(a, b) == 0.0)
            throw std::invalid_argument("orient_forest_from_covariance: zero covariance on a skeleton edge");

    PartialGraph g{cpdag.d, {cpdag.directed.begin(), cpdag.directed.end()},
                   {cpdag.undirected.begin(), cpdag.undirected.end()}};
    while (true) {
        bool progressed = false;
        for (const auto& component : undirected_components(g)) {
            const std::vector<int> chain = longest_undirected_chain(g, component);
            if (chain.size() < 3) continue;  // single undirected edge: not orientable
            const std::size_t edge_count = chain.size() - 1;
            std::vector<double> cov(edge_count);
            for (std::size_t t = 0; t < edge_count; ++t)
                cov[t] = std::abs(sigma(chain[t], chain[t + 1]));

            int tie_at = -1;
            for (std::size_t t = 1; t < edge_count; ++t) {
                if (std::abs(cov[t - 1] - cov[t]) <= tie_tolerance) {
                    tie_at = static_cast<int>(t);
                    break;
                }
            }
            auto orient = [&](int from, int to) {
                g.undirected.erase({std::min(from, to), std::max(from, to)});
                g.directed.emplace(from, to);
            };
            if (tie_at >= 0) {
                // Equal neighboring covariances pin chain[tie_at] as the root
                // of the chain; every chain edge points away from it.
                for (int t = tie_at - 1; t >= 0; --t) orient(chain[static_cast<std::size_t>(t) + 1], chain[static_cast<std::size_t>(t)]);
                for (std::size_t t = static_cast<std::size_t>(tie_at); t < edge_count; ++t)
                    orient(chain[t], chain[t + 1]);
            } else {
                const std::size_t minimizer = static_cast<std::size_t>(
                    std::min_element(cov.begin(), cov.end()) - cov.begin());
                for (std::size_t t = 0; t < edge_count; ++t) {
                    if (t < minimizer)
                        orient(chain[t + 1], chain[t]);
                    else if (t > minimizer)
                        orient(chain[t], chain[t + 1]);
                }
            }
            meek1_closure(g);
            progressed = true;
            break;  // component structure changed; recompute
        }
        if (!progressed) break;
    }

    Cpdag out;
    out.d = cpdag.d;
    out.directed.assign(g.directed.begin(), g.directed.end());
    out.undirected.assign(g.undirected.begin(), g.undirected.end());
    return out;
}

LinearScm nonident_witness(const LinearScm& model, const Dag& target) {
    if (!is_forest(model.dag)) throw std::invalid_argument("nonident_witness: not a forest");
    if (target.vertex_count() != model.dag.vertex_count())
        throw std::invalid_argument("nonident_witness: vertex counts differ");
    for (Eigen::Index i = 1; i < model.noise_var.size(); ++i)
        if (std::abs(model.noise_var(i) - model.noise_var(0)) > 1e-12 * model.noise_var(0))
            throw std::invalid_argument("nonident_witness: noise variances must be equal");
    if (!(cpdag_of_forest(model.dag) == cpdag_of_forest(target)))
        throw std::invalid_argument("nonident_witness: target not in the model's MEC");
    WeightMatrix weights = WeightMatrix::Zero(target.vertex_count(), target.vertex_count());
    for (const auto& [a, b] : target.edges())
        weights(a, b) = model.dag.has_edge(a, b) ? model.weights(a, b) : model.weights(b, a);
    return LinearScm(target, std::move(weights), model.noise_var);
}

}  // namespace iscm
