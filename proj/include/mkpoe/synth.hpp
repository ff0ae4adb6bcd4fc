#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <mkpoe/constraints.hpp>
#include <mkpoe/kernel.hpp>

namespace mkpoe {

/// Rooted tree over class labels.  Items are assigned to leaves.
class Taxonomy {
public:
    struct Node {
        std::string label;
        int parent = -1;
        std::vector<int> children;
        int depth = 0;
    };

    /// Builds from an indented plain-text tree (two or more spaces per
    /// level work; indentation only has to nest consistently).  Lines
    /// starting with '#' and blank lines are skipped.
    static Taxonomy parse(std::istream& in);
    static Taxonomy parse_file(const std::string& path);

    /// Balanced two-level tree: a root, ceil(n_leaves/branch) internal
    /// groups, and n_leaves leaf classes.
    static Taxonomy balanced(int n_leaves, int branch = 3);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    int root() const { return 0; }
    bool is_leaf(int id) const { return node(id).children.empty(); }
    std::vector<int> leaves() const;
    int find_label(const std::string& label) const;  // -1 if absent

    /// Lowest common ancestor of two nodes.
    int lca(int a, int b) const;

    int add_node(const std::string& label, int parent);

private:
    std::vector<Node> nodes_;
};

/// Triadic comparisons (a,b,a,c) where the label LCA of (a,b) lies
/// strictly below the label LCA of (a,c): same-subtree pairs are closer
/// than pairs that only meet higher up.  Sampling is uniform over valid
/// item triples; duplicates collapse, and the result is transitively
/// reduced.  Acyclic by construction; empty when the taxonomy admits no
/// valid triple.
std::vector<Comparison> generate_comparisons(const Taxonomy& taxonomy,
                                             const std::vector<int>& item_labels,
                                             std::uint64_t seed, int budget);

/// Synthetic informative view: each taxonomy node contributes a Gaussian
/// offset in R^16 whose scale shrinks with depth, each item sits at its
/// leaf centroid plus noise_level jitter, and the result is an RBF kernel
/// of those features.  Taxonomy distance correlates with feature distance.
KernelMatrix generate_informative_kernel(const std::vector<int>& item_labels,
                                         const Taxonomy& taxonomy, double noise_level,
                                         std::uint64_t seed);

/// Distractor view: n points uniform on the unit sphere in R^3 under the
/// linear kernel.  Unit diagonal, rank at most 3.
KernelMatrix generate_noise_kernel(int n, std::uint64_t seed);

/// Reverses a seeded fraction of the comparisons (planted label noise).
std::vector<Comparison> plant_reversals(const std::vector<Comparison>& comparisons,
                                        double fraction, std::uint64_t seed);

/// Items file: one line per item, "index label".
void write_items(std::ostream& out, const Taxonomy& taxonomy, const std::vector<int>& item_labels);

}  // namespace mkpoe
