#pragma once

#include <utility>
#include <vector>

#include "iscm/random.hpp"

namespace iscm {

using Edge = std::pair<int, int>;  // (from, to), vertices 0-based internally

// Immutable directed acyclic graph. The constructor rejects self-loops,
// duplicate edges, out-of-range endpoints, and directed cycles.
class Dag {
public:
    Dag() : Dag(1, {}) {}  // single vertex, no edges
    Dag(int d, std::vector<Edge> edges);

    int vertex_count() const { return d_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& parents(int v) const { return parents_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }
    bool has_edge(int from, int to) const;

    bool operator==(const Dag& other) const {
        return d_ == other.d_ && edges_ == other.edges_;
    }

private:
    int d_ = 0;
    std::vector<Edge> edges_;                 // sorted
    std::vector<std::vector<int>> parents_;   // sorted per vertex
    std::vector<std::vector<int>> children_;  // sorted per vertex
};

// Partially directed graph over d vertices; undirected edges stored as
// (min, max). Represents a Markov equivalence class when produced by
// cpdag_of_forest.
struct Cpdag {
    int d = 0;
    std::vector<Edge> directed;    // sorted
    std::vector<Edge> undirected;  // sorted, first < second

    bool operator==(const Cpdag&) const = default;
};

// Random permutation as topological order, then each forward pair included
// independently with p = k / (d - 1); expected total degree per vertex is k.
Dag sample_er(int d, double k, RandomStream& rng);

// Undirected preferential attachment (k edges per arriving vertex, single
// seed vertex), then every edge oriented by an independent uniform random
// permutation.
Dag sample_usf(int d, int k, RandomStream& rng);

// Path graph 0 -> 1 -> ... -> d-1.
Dag chain(int d);

// Deterministic topological order, ties broken by smallest vertex index.
std::vector<int> topological_order(const Dag& dag);

// True iff the undirected skeleton is acyclic.
bool is_forest(const Dag& dag);

// Exact CPDAG of a forest DAG: v-structure edges directed, closure under the
// first Meek rule, everything else undirected. Meek rules 2-4 need skeleton
// triangles and never fire in forests.
Cpdag cpdag_of_forest(const Dag& dag);

// All DAGs in the MEC represented by a forest CPDAG. Guarded to at most 20
// undirected edges.
std::vector<Dag> enumerate_forest_mec(const Cpdag& cpdag);

}  // namespace iscm
