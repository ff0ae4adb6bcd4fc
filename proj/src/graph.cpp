#include <mkpoe/graph.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

#include <mkpoe/rng.hpp>

namespace mkpoe {

std::optional<int> PairGraph::find_vertex(const Pair& p) const {
    auto it = index_.find(p);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int PairGraph::add_vertex(const Pair& p) {
    auto [it, inserted] = index_.emplace(p, vertex_count());
    if (inserted) {
        vertices_.push_back(p);
        out_.emplace_back();
        in_.emplace_back();
    }
    return it->second;
}

bool PairGraph::add_edge(int u, int v) {
    if (u == v) {
        std::ostringstream os;
        os << "self-loop edge on pair (" << vertex(u).a << "," << vertex(u).b << ")";
        throw ValidationError(os.str());
    }
    if (!edge_set_.insert({u, v}).second) return false;
    edges_.emplace_back(u, v);
    out_[static_cast<std::size_t>(u)].push_back(v);
    in_[static_cast<std::size_t>(v)].push_back(u);
    return true;
}

PairGraph build_graph(const std::vector<Comparison>& comparisons) {
    PairGraph g;
    for (std::size_t idx = 0; idx < comparisons.size(); ++idx) {
        validate_comparison(comparisons[idx], "index " + std::to_string(idx));
        const Comparison c = canonicalize(comparisons[idx]);
        const int u = g.add_vertex(c.closer());
        const int v = g.add_vertex(c.farther());
        g.add_edge(u, v);
    }
    return g;
}

namespace {

// Iterative DFS coloring.  Returns a cycle (first vertex repeated at the
// end) or nullopt.
std::optional<std::vector<int>> dfs_find_cycle(const PairGraph& g) {
    const int n = g.vertex_count();
    enum : char { White, Gray, Black };
    std::vector<char> color(static_cast<std::size_t>(n), White);
    std::vector<int> parent(static_cast<std::size_t>(n), -1);

    for (int root = 0; root < n; ++root) {
        if (color[static_cast<std::size_t>(root)] != White) continue;
        // stack of (vertex, next successor index)
        std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
        color[static_cast<std::size_t>(root)] = Gray;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            const auto& succ = g.successors(v);
            if (next < succ.size()) {
                const int w = succ[next++];
                if (color[static_cast<std::size_t>(w)] == Gray) {
                    // cycle: walk parents from v back to w
                    std::vector<int> cycle{w};
                    for (int x = v; x != w; x = parent[static_cast<std::size_t>(x)]) {
                        cycle.push_back(x);
                    }
                    std::reverse(cycle.begin() + 1, cycle.end());
                    cycle.push_back(w);
                    return cycle;
                }
                if (color[static_cast<std::size_t>(w)] == White) {
                    color[static_cast<std::size_t>(w)] = Gray;
                    parent[static_cast<std::size_t>(w)] = v;
                    stack.emplace_back(w, 0);
                }
            } else {
                color[static_cast<std::size_t>(v)] = Black;
                stack.pop_back();
            }
        }
    }
    return std::nullopt;
}

// True iff `target` is reachable from `start` following directed edges.
bool reachable(const PairGraph& g, int start, int target) {
    if (start == target) return true;
    std::vector<char> seen(static_cast<std::size_t>(g.vertex_count()), 0);
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : g.successors(v)) {
            if (w == target) return true;
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                stack.push_back(w);
            }
        }
    }
    return false;
}

std::vector<int> kahn_order(const PairGraph& g) {
    const int n = g.vertex_count();
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
        indeg[static_cast<std::size_t>(v)] = static_cast<int>(g.predecessors(v).size());
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<int> ready;
    for (int v = 0; v < n; ++v) {
        if (indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
    }
    while (!ready.empty()) {
        const int v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (int w : g.successors(v)) {
            if (--indeg[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
        }
    }
    return order;  // shorter than n iff cyclic
}

CycleError make_cycle_error(const PairGraph& g, const std::vector<int>& cycle,
                            const std::string& op) {
    std::vector<std::pair<int, int>> witness;
    witness.reserve(cycle.size());
    for (int v : cycle) {
        witness.emplace_back(g.vertex(v).a, g.vertex(v).b);
    }
    return CycleError(op + " requires an acyclic graph; cycle: " + format_cycle(g, cycle),
                      std::move(witness));
}

}  // namespace

bool is_acyclic(const PairGraph& g) { return !dfs_find_cycle(g).has_value(); }

std::optional<std::vector<int>> find_cycle(const PairGraph& g) { return dfs_find_cycle(g); }

std::vector<int> topological_order(const PairGraph& g) {
    std::vector<int> order = kahn_order(g);
    if (static_cast<int>(order.size()) != g.vertex_count()) {
        throw make_cycle_error(g, *dfs_find_cycle(g), "topological order");
    }
    return order;
}

std::string format_cycle(const PairGraph& g, const std::vector<int>& cycle) {
    std::ostringstream os;
    for (std::size_t t = 0; t < cycle.size(); ++t) {
        const Pair& p = g.vertex(cycle[t]);
        if (t) os << " -> ";
        os << "(" << p.a << "," << p.b << ")";
    }
    return os.str();
}

PairGraph max_acyclic_subgraph(const PairGraph& g, std::uint64_t seed) {
    PairGraph scratch;
    for (const Pair& p : g.vertices()) scratch.add_vertex(p);

    std::vector<std::size_t> order(g.edges().size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<char> kept(g.edges().size(), 0);
    for (std::size_t e : order) {
        const auto [u, v] = g.edges()[e];
        // (u,v) closes a cycle iff u is already reachable from v
        if (!reachable(scratch, v, u)) {
            scratch.add_edge(u, v);
            kept[e] = 1;
        }
    }
    // re-emit in the input's edge order so clean inputs pass through
    // unchanged
    PairGraph out;
    for (const Pair& p : g.vertices()) out.add_vertex(p);
    for (std::size_t e = 0; e < g.edges().size(); ++e) {
        if (kept[e]) out.add_edge(g.edges()[e].first, g.edges()[e].second);
    }
    return out;
}

PairGraph transitive_closure(const PairGraph& g) {
    PairGraph out;
    for (const Pair& p : g.vertices()) out.add_vertex(p);
    const int n = g.vertex_count();
    for (int s = 0; s < n; ++s) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack(g.successors(s));
        for (int w : stack) seen[static_cast<std::size_t>(w)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : g.successors(v)) {
                if (!seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        for (int v = 0; v < n; ++v) {
            if (seen[static_cast<std::size_t>(v)] && v != s) out.add_edge(s, v);
        }
    }
    return out;
}

PairGraph transitive_reduction(const PairGraph& g) {
    if (auto cycle = dfs_find_cycle(g)) {
        throw make_cycle_error(g, *cycle, "transitive reduction");
    }
    const PairGraph closure = transitive_closure(g);
    PairGraph out;
    for (const Pair& p : g.vertices()) out.add_vertex(p);
    for (const auto& [u, v] : g.edges()) {
        // redundant iff some other successor of u reaches v
        bool redundant = false;
        for (int w : g.successors(u)) {
            if (w != v && closure.has_edge(w, v)) {
                redundant = true;
                break;
            }
        }
        if (!redundant) out.add_edge(u, v);
    }
    return out;
}

int diameter(const PairGraph& g) {
    const std::vector<int> order = kahn_order(g);
    if (static_cast<int>(order.size()) != g.vertex_count()) {
        throw make_cycle_error(g, *dfs_find_cycle(g), "diameter");
    }
    std::vector<int> longest(static_cast<std::size_t>(g.vertex_count()), 0);
    int best = 0;
    for (int v : order) {
        for (int p : g.predecessors(v)) {
            longest[static_cast<std::size_t>(v)] =
                std::max(longest[static_cast<std::size_t>(v)], longest[static_cast<std::size_t>(p)] + 1);
        }
        best = std::max(best, longest[static_cast<std::size_t>(v)]);
    }
    return best;
}

std::vector<Comparison> graph_to_comparisons(const PairGraph& g) {
    std::vector<Comparison> out;
    out.reserve(g.edges().size());
    for (const auto& [u, v] : g.edges()) {
        const Pair& p = g.vertex(u);
        const Pair& q = g.vertex(v);
        out.push_back(Comparison{p.a, p.b, q.a, q.b});
    }
    return out;
}

std::vector<Comparison> process_constraints(const std::vector<Comparison>& comparisons,
                                            std::uint64_t seed, ProcessStats* stats) {
    ProcessStats s;
    s.input = static_cast<int>(comparisons.size());

    const std::vector<Comparison> deduped = canonical_dedup(comparisons);
    s.deduped = static_cast<int>(deduped.size());

    const std::vector<Comparison> consistent2 = prune_direct_contradictions(deduped);
    s.contradiction_free = static_cast<int>(consistent2.size());

    const PairGraph acyclic = max_acyclic_subgraph(build_graph(consistent2), seed);
    s.acyclic = acyclic.edge_count();

    const PairGraph reduced = transitive_reduction(acyclic);
    s.reduced = reduced.edge_count();

    // map surviving edges back onto the deduped comparisons, keeping order
    std::set<std::pair<Pair, Pair>> kept;
    for (const auto& [u, v] : reduced.edges()) {
        kept.emplace(reduced.vertex(u), reduced.vertex(v));
    }
    std::vector<Comparison> out;
    out.reserve(kept.size());
    for (const Comparison& c : consistent2) {
        if (kept.count({c.closer(), c.farther()})) out.push_back(c);
    }

    if (stats) *stats = s;
    return out;
}

}  // namespace mkpoe
