#include "iscm/graphs.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace iscm {

namespace {

// Kahn's algorithm with a min-heap so ties break on vertex index.
// Returns empty vector when the edge set has a directed cycle.
std::vector<int> kahn_order(int d, const std::vector<std::vector<int>>& children,
                            const std::vector<std::vector<int>>& parents) {
    std::vector<int> indeg(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) indeg[static_cast<std::size_t>(v)] = static_cast<int>(parents[static_cast<std::size_t>(v)].size());
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < d; ++v)
        if (indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(d));
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int c : children[static_cast<std::size_t>(v)])
            if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
    if (static_cast<int>(order.size()) != d) return {};
    return order;
}

int skeleton_component_count(int d, const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(d));
    for (const auto& [a, b] : edges) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    int components = 0;
    std::vector<int> stack;
    for (int s = 0; s < d; ++s) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        ++components;
        stack.push_back(s);
        seen[static_cast<std::size_t>(s)] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int u : adj[static_cast<std::size_t>(v)]) {
                if (!seen[static_cast<std::size_t>(u)]) {
                    seen[static_cast<std::size_t>(u)] = 1;
                    stack.push_back(u);
                }
            }
        }
    }
    return components;
}

}  // namespace

Dag::Dag(int d, std::vector<Edge> edges) : d_(d), edges_(std::move(edges)) {
    if (d_ <= 0) throw std::invalid_argument("Dag: vertex count must be positive");
    std::sort(edges_.begin(), edges_.end());
    parents_.resize(static_cast<std::size_t>(d_));
    children_.resize(static_cast<std::size_t>(d_));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        auto [from, to] = edges_[e];
        if (from < 0 || from >= d_ || to < 0 || to >= d_)
            throw std::invalid_argument("Dag: edge endpoint out of range");
        if (from == to) throw std::invalid_argument("Dag: self-loop");
        if (e > 0 && edges_[e] == edges_[e - 1]) throw std::invalid_argument("Dag: duplicate edge");
        children_[static_cast<std::size_t>(from)].push_back(to);
        parents_[static_cast<std::size_t>(to)].push_back(from);
    }
    if (kahn_order(d_, children_, parents_).empty())
        throw std::invalid_argument("Dag: cycle detected");
}

bool Dag::has_edge(int from, int to) const {
    const auto& ch = children_[static_cast<std::size_t>(from)];
    return std::binary_search(ch.begin(), ch.end(), to);
}

Dag sample_er(int d, double k, RandomStream& rng) {
    if (d <= 0) throw std::invalid_argument("sample_er: d must be positive");
    if (k <= 0.0 || k > static_cast<double>(d - 1))
        throw std::invalid_argument("sample_er: need 0 < k <= d - 1");
    const double p = std::min(1.0, k / static_cast<double>(d - 1));
    const std::vector<int> order = rng.permutation(d);
    std::vector<Edge> edges;
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            if (rng.uniform(0.0, 1.0) < p) edges.emplace_back(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
        }
    }
    return Dag(d, std::move(edges));
}

Dag sample_usf(int d, int k, RandomStream& rng) {
    if (d <= 0) throw std::invalid_argument("sample_usf: d must be positive");
    if (k < 1 || k >= d) throw std::invalid_argument("sample_usf: need 1 <= k < d");
    // Undirected Barabasi-Albert skeleton grown from a single seed vertex;
    // vertex t attaches min(k, t) edges to distinct earlier vertices chosen
    // with probability proportional to current degree.
    std::vector<std::pair<int, int>> skeleton;
    std::vector<int> stakes;  // vertex v appears degree(v) times
    for (int t = 1; t < d; ++t) {
        const int m = std::min(k, t);
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < m) {
            int candidate;
            if (stakes.empty()) {
                candidate = rng.uniform_int(0, t - 1);
            } else {
                candidate = stakes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(stakes.size()) - 1))];
            }
            targets.insert(candidate);
        }
        for (int u : targets) {
            skeleton.emplace_back(u, t);
            stakes.push_back(u);
            stakes.push_back(t);
        }
    }
    // Orient every skeleton edge along an independent random permutation.
    const std::vector<int> perm = rng.permutation(d);
    std::vector<int> position(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) position[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
    std::vector<Edge> edges;
    edges.reserve(skeleton.size());
    for (const auto& [a, b] : skeleton) {
        if (position[static_cast<std::size_t>(a)] < position[static_cast<std::size_t>(b)])
            edges.emplace_back(a, b);
        else
            edges.emplace_back(b, a);
    }
    return Dag(d, std::move(edges));
}

Dag chain(int d) {
    if (d <= 0) throw std::invalid_argument("chain: d must be positive");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(d - 1));
    for (int v = 0; v + 1 < d; ++v) edges.emplace_back(v, v + 1);
    return Dag(d, std::move(edges));
}

std::vector<int> topological_order(const Dag& dag) {
    std::vector<std::vector<int>> children(static_cast<std::size_t>(dag.vertex_count()));
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(dag.vertex_count()));
    for (int v = 0; v < dag.vertex_count(); ++v) {
        children[static_cast<std::size_t>(v)] = dag.children(v);
        parents[static_cast<std::size_t>(v)] = dag.parents(v);
    }
    std::vector<int> order = kahn_order(dag.vertex_count(), children, parents);
    if (order.empty() && dag.vertex_count() > 0)
        throw std::runtime_error("topological_order: cycle detected");
    return order;
}

bool is_forest(const Dag& dag) {
    return dag.edge_count() == dag.vertex_count() - skeleton_component_count(dag.vertex_count(), dag.edges());
}

namespace {

// First Meek rule to fixpoint: a -> b directed, b - c undirected, a and c
// non-adjacent, orient b -> c. In-place on the directed/undirected sets.
void meek1_closure(int d, std::set<Edge>& directed, std::set<Edge>& undirected) {
    std::vector<std::set<int>> adjacent(static_cast<std::size_t>(d));
    for (const auto& [a, b] : directed) {
        adjacent[static_cast<std::size_t>(a)].insert(b);
        adjacent[static_cast<std::size_t>(b)].insert(a);
    }
    for (const auto& [a, b] : undirected) {
        adjacent[static_cast<std::size_t>(a)].insert(b);
        adjacent[static_cast<std::size_t>(b)].insert(a);
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [a, b] : directed) {
            for (int c : adjacent[static_cast<std::size_t>(b)]) {
                if (c == a || adjacent[static_cast<std::size_t>(a)].count(c)) continue;
                Edge e{std::min(b, c), std::max(b, c)};
                if (undirected.erase(e)) {
                    directed.emplace(b, c);
                    changed = true;
                    break;
                }
            }
            if (changed) break;
        }
    }
}

}  // namespace

Cpdag cpdag_of_forest(const Dag& dag) {
    if (!is_forest(dag)) throw std::invalid_argument("cpdag_of_forest: not a forest");
    std::set<Edge> directed;
    std::set<Edge> undirected;
    for (const auto& [a, b] : dag.edges()) {
        // In a forest any two parents of b are non-adjacent, so every edge
        // into a node with >= 2 parents sits in a v-structure.
        if (dag.parents(b).size() >= 2)
            directed.emplace(a, b);
        else
            undirected.emplace(std::min(a, b), std::max(a, b));
    }
    meek1_closure(dag.vertex_count(), directed, undirected);
    Cpdag out;
    out.d = dag.vertex_count();
    out.directed.assign(directed.begin(), directed.end());
    out.undirected.assign(undirected.begin(), undirected.end());
    return out;
}

std::vector<Dag> enumerate_forest_mec(const Cpdag& cpdag) {
    std::vector<Edge> skeleton = cpdag.directed;
    skeleton.insert(skeleton.end(), cpdag.undirected.begin(), cpdag.undirected.end());
    if (static_cast<int>(skeleton.size()) != cpdag.d - skeleton_component_count(cpdag.d, skeleton))
        throw std::invalid_argument("enumerate_forest_mec: skeleton is not a forest");
    const int u = static_cast<int>(cpdag.undirected.size());
    if (u > 20) throw std::invalid_argument("enumerate_forest_mec: too many undirected edges");
    std::vector<Dag> members;
    for (std::uint64_t mask = 0; mask < (1ULL << u); ++mask) {
        std::vector<Edge> edges = cpdag.directed;
        for (int e = 0; e < u; ++e) {
            const auto& [a, b] = cpdag.undirected[static_cast<std::size_t>(e)];
            if (mask & (1ULL << e))
                edges.emplace_back(b, a);
            else
                edges.emplace_back(a, b);
        }
        Dag candidate(cpdag.d, std::move(edges));  // forest skeleton: always acyclic
        if (cpdag_of_forest(candidate) == cpdag) members.push_back(std::move(candidate));
    }
    return members;
}

}  // namespace iscm
