#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <mkpoe/constraints.hpp>

namespace mkpoe {

/// Directed graph whose vertices are canonical item pairs and whose edges
/// are relative comparisons: an edge (i,j) -> (k,l) asserts d(i,j) < d(k,l).
/// No self loops, no duplicate edges.
class PairGraph {
public:
    PairGraph() = default;

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    const std::vector<Pair>& vertices() const { return vertices_; }
    const Pair& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }

    /// Edges as (source, target) vertex ids, in insertion order.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    const std::vector<int>& successors(int v) const { return out_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& predecessors(int v) const { return in_[static_cast<std::size_t>(v)]; }

    bool has_edge(int u, int v) const { return edge_set_.count({u, v}) != 0; }
    std::optional<int> find_vertex(const Pair& p) const;

    /// Returns the id of p, inserting it if new.
    int add_vertex(const Pair& p);

    /// Returns false for a duplicate edge; throws ValidationError on a self
    /// loop.
    bool add_edge(int u, int v);

private:
    std::vector<Pair> vertices_;
    std::map<Pair, int> index_;
    std::vector<std::pair<int, int>> edges_;
    std::set<std::pair<int, int>> edge_set_;
    std::vector<std::vector<int>> out_;
    std::vector<std::vector<int>> in_;
};

/// One vertex per distinct canonical pair, one edge per distinct
/// canonicalized comparison.  Validates every tuple.
PairGraph build_graph(const std::vector<Comparison>& comparisons);

/// True iff the graph contains no directed cycle.
bool is_acyclic(const PairGraph& g);

/// One directed cycle as a vertex-id sequence (first id repeated at the
/// end), or nullopt for a DAG.
std::optional<std::vector<int>> find_cycle(const PairGraph& g);

/// Vertex ids ordered so every edge points forward.  Throws CycleError
/// (with witness) on cyclic input.
std::vector<int> topological_order(const PairGraph& g);

/// Human-readable rendering of a cycle, e.g. "(0,1) -> (2,3) -> (0,1)".
std::string format_cycle(const PairGraph& g, const std::vector<int>& cycle);

/// Greedy maximal acyclic edge subset: edges are visited in a
/// seed-determined uniformly random order and kept iff the kept set stays
/// acyclic.  Output keeps all vertices; deterministic for a fixed seed.
PairGraph max_acyclic_subgraph(const PairGraph& g, std::uint64_t seed);

/// Edge (u,v) present iff a nonempty directed path u -> v exists in g,
/// for distinct u and v (pair graphs carry no self loops, so
/// self-reachability in a cyclic input is not represented).
PairGraph transitive_closure(const PairGraph& g);

/// Fewest-edge graph with the same transitive closure; defined for DAGs.
/// Throws CycleError (with witness) on cyclic input.
PairGraph transitive_reduction(const PairGraph& g);

/// Number of edges on the longest directed path; 0 for an edgeless graph.
/// Throws CycleError on cyclic input.
int diameter(const PairGraph& g);

/// Edge (u,v) -> canonical comparison over the endpoint pairs, in edge
/// insertion order.
std::vector<Comparison> graph_to_comparisons(const PairGraph& g);

/// Comparison counts surviving each stage of process_constraints.
struct ProcessStats {
    int input = 0;
    int deduped = 0;
    int contradiction_free = 0;
    int acyclic = 0;
    int reduced = 0;
};

/// Full cleanup pipeline: canonicalize/dedupe, drop direct contradictions,
/// extract a maximal acyclic subset (seeded), take the transitive
/// reduction.  Survivors come back in input order; the result is a strict
/// partial order over pairs.
std::vector<Comparison> process_constraints(const std::vector<Comparison>& comparisons,
                                            std::uint64_t seed, ProcessStats* stats = nullptr);

}  // namespace mkpoe
