#include <mkpoe/synth.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <mkpoe/graph.hpp>
#include <mkpoe/rng.hpp>

namespace mkpoe {

Taxonomy Taxonomy::parse(std::istream& in) {
    Taxonomy tax;
    // stack of (indent, node id) along the current root-to-leaf path
    std::vector<std::pair<int, int>> stack;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find('\t') != std::string::npos) {
            throw ParseError("tabs are not allowed in taxonomy files; indent with spaces", lineno);
        }
        const std::size_t start = line.find_first_not_of(" \r");
        if (start == std::string::npos || line[start] == '#') continue;
        const int indent = static_cast<int>(start);
        std::string label = line.substr(start);
        while (!label.empty() && (label.back() == ' ' || label.back() == '\r')) label.pop_back();

        while (!stack.empty() && stack.back().first >= indent) stack.pop_back();
        if (stack.empty()) {
            if (tax.node_count() > 0) {
                throw ParseError("second root '" + label + "'; a taxonomy has one root", lineno);
            }
            if (indent != 0) throw ParseError("root must not be indented", lineno);
            stack.emplace_back(indent, tax.add_node(label, -1));
        } else {
            stack.emplace_back(indent, tax.add_node(label, stack.back().second));
        }
    }
    if (tax.node_count() == 0) throw ParseError("empty taxonomy", lineno == 0 ? 1 : lineno);
    return tax;
}

Taxonomy Taxonomy::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open taxonomy file: " + path);
    return parse(in);
}

Taxonomy Taxonomy::balanced(int n_leaves, int branch) {
    if (n_leaves < 1) throw ValidationError("balanced taxonomy needs at least one leaf");
    if (branch < 1) throw ValidationError("balanced taxonomy branch factor must be positive");
    Taxonomy tax;
    tax.add_node("root", -1);
    const int groups = (n_leaves + branch - 1) / branch;
    std::vector<int> group_ids;
    for (int g = 0; g < groups; ++g) {
        group_ids.push_back(tax.add_node("group" + std::to_string(g), 0));
    }
    for (int c = 0; c < n_leaves; ++c) {
        tax.add_node("class" + std::to_string(c), group_ids[static_cast<std::size_t>(c / branch)]);
    }
    return tax;
}

int Taxonomy::add_node(const std::string& label, int parent) {
    Node nd;
    nd.label = label;
    nd.parent = parent;
    nd.depth = parent < 0 ? 0 : node(parent).depth + 1;
    const int id = node_count();
    nodes_.push_back(std::move(nd));
    if (parent >= 0) nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
    return id;
}

std::vector<int> Taxonomy::leaves() const {
    std::vector<int> out;
    for (int id = 0; id < node_count(); ++id) {
        if (is_leaf(id)) out.push_back(id);
    }
    return out;
}

int Taxonomy::find_label(const std::string& label) const {
    for (int id = 0; id < node_count(); ++id) {
        if (node(id).label == label) return id;
    }
    return -1;
}

int Taxonomy::lca(int a, int b) const {
    while (a != b) {
        if (node(a).depth >= node(b).depth) {
            a = node(a).parent;
        } else {
            b = node(b).parent;
        }
    }
    return a;
}

namespace {

void check_labels(const Taxonomy& taxonomy, const std::vector<int>& item_labels, const char* op) {
    for (std::size_t t = 0; t < item_labels.size(); ++t) {
        const int label = item_labels[t];
        if (label < 0 || label >= taxonomy.node_count()) {
            throw ValidationError(std::string(op) + ": item " + std::to_string(t) +
                                  " has label id " + std::to_string(label) + " outside the tree");
        }
        if (!taxonomy.is_leaf(label)) {
            throw ValidationError(std::string(op) + ": item " + std::to_string(t) +
                                  " is labeled with non-leaf '" + taxonomy.node(label).label + "'");
        }
    }
}

}  // namespace

std::vector<Comparison> generate_comparisons(const Taxonomy& taxonomy,
                                             const std::vector<int>& item_labels,
                                             std::uint64_t seed, int budget) {
    check_labels(taxonomy, item_labels, "generate_comparisons");
    if (budget < 0) throw ValidationError("generate_comparisons: negative budget");
    const std::size_t n = item_labels.size();
    if (budget == 0 || n < 3) return {};

    Rng rng(seed);
    std::set<Comparison> seen;
    std::vector<Comparison> sampled;
    // rejection sampling over item triples; bail out when valid triples
    // are too rare to fill the budget
    const long long max_attempts = 200LL * budget + 10000;
    for (long long attempt = 0;
         attempt < max_attempts && static_cast<int>(sampled.size()) < budget; ++attempt) {
        const int a = rng.index(n);
        const int b = rng.index(n);
        const int c = rng.index(n);
        if (a == b || a == c || b == c) continue;
        const int lab = taxonomy.lca(item_labels[static_cast<std::size_t>(a)],
                                     item_labels[static_cast<std::size_t>(b)]);
        const int lac = taxonomy.lca(item_labels[static_cast<std::size_t>(a)],
                                     item_labels[static_cast<std::size_t>(c)]);
        // (a,b) closer than (a,c) iff their LCA sits strictly deeper on the
        // same root path
        if (lab == lac || taxonomy.lca(lab, lac) != lac) continue;
        const Comparison tuple = canonicalize(Comparison{a, b, a, c});
        if (seen.insert(tuple).second) sampled.push_back(tuple);
    }
    if (sampled.empty()) return {};

    return graph_to_comparisons(transitive_reduction(build_graph(sampled)));
}

KernelMatrix generate_informative_kernel(const std::vector<int>& item_labels,
                                         const Taxonomy& taxonomy, double noise_level,
                                         std::uint64_t seed) {
    check_labels(taxonomy, item_labels, "generate_informative_kernel");
    if (!(noise_level >= 0.0)) {
        throw ValidationError("generate_informative_kernel: noise level must be nonnegative");
    }
    constexpr int kDim = 16;
    Rng rng(seed);

    // every node below the root contributes an offset; deeper levels move
    // less, so siblings stay closer than cousins
    Eigen::MatrixXd offsets = Eigen::MatrixXd::Zero(taxonomy.node_count(), kDim);
    for (int id = 1; id < taxonomy.node_count(); ++id) {
        const double scale = std::pow(0.6, taxonomy.node(id).depth - 1);
        for (int t = 0; t < kDim; ++t) offsets(id, t) = scale * rng.gaussian();
    }
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(taxonomy.node_count(), kDim);
    for (int id = 1; id < taxonomy.node_count(); ++id) {
        centroids.row(id) = centroids.row(taxonomy.node(id).parent) + offsets.row(id);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(item_labels.size());
    FeatureTable features(n, kDim);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int t = 0; t < kDim; ++t) {
            features(i, t) =
                centroids(item_labels[static_cast<std::size_t>(i)], t) +
                noise_level * rng.gaussian();
        }
    }

    // bandwidth from the data scale so similarities neither saturate nor
    // vanish
    double mean_sq = 0.0;
    long long count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            mean_sq += (features.row(i) - features.row(j)).squaredNorm();
            ++count;
        }
    }
    const double gamma = count > 0 && mean_sq > 0.0
                             ? 0.5 * static_cast<double>(count) / mean_sq
                             : 1.0;
    return rbf_kernel(features, gamma);
}

KernelMatrix generate_noise_kernel(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("generate_noise_kernel: need at least one item");
    Rng rng(seed);
    FeatureTable points(n, 3);
    for (int i = 0; i < n; ++i) {
        Eigen::Vector3d v;
        do {
            v << rng.gaussian(), rng.gaussian(), rng.gaussian();
        } while (v.norm() < 1e-12);
        points.row(i) = v.normalized();
    }
    return linear_kernel(points);
}

std::vector<Comparison> plant_reversals(const std::vector<Comparison>& comparisons,
                                        double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw ValidationError("plant_reversals: fraction must lie in [0,1]");
    }
    std::vector<std::size_t> order(comparisons.size());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t flip = static_cast<std::size_t>(fraction * comparisons.size());

    std::vector<char> flipped(comparisons.size(), 0);
    for (std::size_t t = 0; t < flip; ++t) flipped[order[t]] = 1;

    std::vector<Comparison> out;
    out.reserve(comparisons.size());
    for (std::size_t t = 0; t < comparisons.size(); ++t) {
        out.push_back(flipped[t] ? reversed(comparisons[t]) : comparisons[t]);
    }
    return out;
}

void write_items(std::ostream& out, const Taxonomy& taxonomy,
                 const std::vector<int>& item_labels) {
    check_labels(taxonomy, item_labels, "write_items");
    for (std::size_t t = 0; t < item_labels.size(); ++t) {
        out << t << ' ' << taxonomy.node(item_labels[t]).label << '\n';
    }
}

}  // namespace mkpoe
