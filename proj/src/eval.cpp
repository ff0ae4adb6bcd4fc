#include <mkpoe/eval.hpp>

#include <algorithm>
#include <set>
#include <sstream>

#include <mkpoe/rng.hpp>

namespace mkpoe {

DistanceFn coordinate_distances(const Eigen::MatrixXd& coords) {
    return [coords](int i, int j) { return (coords.row(i) - coords.row(j)).squaredNorm(); };
}

DistanceFn native_kernel_distances(const KernelMatrix& kernel) {
    return [kernel](int i, int j) { return kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j); };
}

double gauc(const DistanceFn& distance, const std::vector<Comparison>& comparisons) {
    if (comparisons.empty()) throw ValidationError("gauc: empty comparison set");
    int satisfied = 0;
    for (const Comparison& c : comparisons) {
        if (distance(c.i, c.j) < distance(c.k, c.l)) ++satisfied;
    }
    return static_cast<double>(satisfied) / static_cast<double>(comparisons.size());
}

double hinge_loss(const DistanceFn& distance, const std::vector<Comparison>& comparisons) {
    if (comparisons.empty()) throw ValidationError("hinge_loss: empty comparison set");
    double total = 0.0;
    for (const Comparison& c : comparisons) {
        total += std::max(0.0, 1.0 + distance(c.i, c.j) - distance(c.k, c.l));
    }
    return total / static_cast<double>(comparisons.size());
}

std::vector<Comparison> filter_test_comparisons(const std::vector<Comparison>& comparisons,
                                                const std::vector<int>& train_items,
                                                const std::vector<int>& test_items) {
    const std::set<int> train(train_items.begin(), train_items.end());
    const std::set<int> test(test_items.begin(), test_items.end());
    for (int t : test_items) {
        if (train.count(t)) {
            throw ValidationError("filter_test_comparisons: item " + std::to_string(t) +
                                  " appears in both train and test sets");
        }
    }
    std::vector<Comparison> kept;
    for (const Comparison& c : comparisons) {
        // triadic form: the two pairs share exactly one item
        int shared, u, v;
        if (c.i == c.k) {
            shared = c.i, u = c.j, v = c.l;
        } else if (c.i == c.l) {
            shared = c.i, u = c.j, v = c.k;
        } else if (c.j == c.k) {
            shared = c.j, u = c.i, v = c.l;
        } else if (c.j == c.l) {
            shared = c.j, u = c.i, v = c.k;
        } else {
            continue;
        }
        if (test.count(shared) && train.count(u) && train.count(v)) {
            kept.push_back(c);
        }
    }
    return prune_direct_contradictions(kept);
}

SplitSpec make_split(int n, double test_fraction, std::uint64_t seed, int folds) {
    if (n <= 0) throw ValidationError("make_split: item count must be positive");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw ValidationError("make_split: test fraction must lie in [0,1)");
    }
    std::vector<int> items(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) items[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(items);

    SplitSpec split;
    split.folds = folds;
    split.seed = seed;
    const int test_count = static_cast<int>(test_fraction * n);
    split.test.assign(items.begin(), items.begin() + test_count);
    split.train.assign(items.begin() + test_count, items.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

namespace {

// Comparisons with all four items inside the id map, reindexed.
std::vector<Comparison> restrict_comparisons(const std::vector<Comparison>& comparisons,
                                             const std::vector<int>& local_id) {
    std::vector<Comparison> out;
    for (const Comparison& c : comparisons) {
        const int i = local_id[static_cast<std::size_t>(c.i)];
        const int j = local_id[static_cast<std::size_t>(c.j)];
        const int k = local_id[static_cast<std::size_t>(c.k)];
        const int l = local_id[static_cast<std::size_t>(c.l)];
        if (i >= 0 && j >= 0 && k >= 0 && l >= 0) {
            out.push_back(Comparison{i, j, k, l});
        }
    }
    return out;
}

}  // namespace

SplitResult evaluate_split(const std::vector<KernelMatrix>& kernels,
                           const std::vector<Comparison>& comparisons,
                           const std::vector<int>& train_items,
                           const std::vector<int>& test_items, const Hyperparams& hp) {
    if (kernels.empty()) throw ValidationError("evaluate_split: no kernels given");
    const int n = static_cast<int>(kernels.front().rows());

    std::vector<int> local_id(static_cast<std::size_t>(n), -1);
    for (std::size_t t = 0; t < train_items.size(); ++t) {
        const int item = train_items[t];
        if (item < 0 || item >= n) {
            throw ValidationError("evaluate_split: train item " + std::to_string(item) +
                                  " out of range");
        }
        local_id[static_cast<std::size_t>(item)] = static_cast<int>(t);
    }

    const std::vector<Comparison> train_comps = restrict_comparisons(comparisons, local_id);
    const std::vector<Comparison> test_comps =
        filter_test_comparisons(comparisons, train_items, test_items);
    if (train_comps.empty()) {
        throw ValidationError("evaluate_split: no training comparisons inside the training set");
    }
    if (test_comps.empty()) {
        throw ValidationError("evaluate_split: no usable held-out comparisons after filtering");
    }

    const Eigen::Index ntr = static_cast<Eigen::Index>(train_items.size());
    std::vector<KernelMatrix> train_kernels;
    train_kernels.reserve(kernels.size());
    for (const KernelMatrix& k : kernels) {
        KernelMatrix sub(ntr, ntr);
        for (Eigen::Index a = 0; a < ntr; ++a) {
            for (Eigen::Index b = 0; b < ntr; ++b) {
                sub(a, b) = k(train_items[static_cast<std::size_t>(a)],
                              train_items[static_cast<std::size_t>(b)]);
            }
        }
        train_kernels.push_back(std::move(sub));
    }

    SplitResult result;
    TrainResult trained = train(train_kernels, train_comps, hp);
    result.metrics = std::move(trained.metrics);
    result.model = factorize(result.metrics);
    result.train_comparisons = static_cast<int>(train_comps.size());
    result.test_comparisons = static_cast<int>(test_comps.size());

    // coordinates for everyone: training items via their kernel columns,
    // held-out items via out-of-sample columns against the training set
    const Eigen::MatrixXd train_coords = embed_train(result.model, train_kernels);
    Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, train_coords.cols());
    for (Eigen::Index t = 0; t < ntr; ++t) {
        coords.row(train_items[static_cast<std::size_t>(t)]) = train_coords.row(t);
    }
    std::vector<Eigen::VectorXd> kcols(kernels.size());
    for (int item : test_items) {
        for (std::size_t p = 0; p < kernels.size(); ++p) {
            Eigen::VectorXd col(ntr);
            for (Eigen::Index t = 0; t < ntr; ++t) {
                col(t) = kernels[p](train_items[static_cast<std::size_t>(t)], item);
            }
            kcols[p] = std::move(col);
        }
        coords.row(item) = embed_oos(result.model, kcols).transpose();
    }

    const DistanceFn dist = coordinate_distances(coords);
    result.gauc = gauc(dist, test_comps);
    result.hinge = hinge_loss(dist, test_comps);
    return result;
}

CrossValResult cross_validate_beta(const std::vector<KernelMatrix>& kernels,
                                   const std::vector<Comparison>& comparisons,
                                   std::vector<double> grid, int folds, const Hyperparams& hp) {
    if (grid.empty()) throw ValidationError("cross_validate_beta: empty beta grid");
    if (folds < 2) throw ValidationError("cross_validate_beta: need at least 2 folds");
    if (kernels.empty()) throw ValidationError("cross_validate_beta: no kernels given");
    const int n = static_cast<int>(kernels.front().rows());
    if (folds > n) throw ValidationError("cross_validate_beta: more folds than items");

    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    // seeded item-level folds
    std::vector<int> items(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) items[static_cast<std::size_t>(i)] = i;
    Rng rng(hp.seed);
    rng.shuffle(items);
    std::vector<std::vector<int>> fold_items(static_cast<std::size_t>(folds));
    for (int i = 0; i < n; ++i) {
        fold_items[static_cast<std::size_t>(i % folds)].push_back(items[static_cast<std::size_t>(i)]);
    }

    CrossValResult result;
    struct FoldSets {
        std::vector<int> train, val;
    };
    std::vector<FoldSets> usable;
    for (int f = 0; f < folds; ++f) {
        FoldSets sets;
        sets.val = fold_items[static_cast<std::size_t>(f)];
        for (int g = 0; g < folds; ++g) {
            if (g == f) continue;
            sets.train.insert(sets.train.end(), fold_items[static_cast<std::size_t>(g)].begin(),
                              fold_items[static_cast<std::size_t>(g)].end());
        }
        std::sort(sets.train.begin(), sets.train.end());
        std::sort(sets.val.begin(), sets.val.end());

        std::vector<int> local_id(static_cast<std::size_t>(n), -1);
        for (std::size_t t = 0; t < sets.train.size(); ++t) {
            local_id[static_cast<std::size_t>(sets.train[t])] = static_cast<int>(t);
        }
        const bool has_train = !restrict_comparisons(comparisons, local_id).empty();
        const bool has_val =
            !filter_test_comparisons(comparisons, sets.train, sets.val).empty();
        if (!has_train || !has_val) {
            std::ostringstream os;
            os << "fold " << f << " skipped: "
               << (!has_train ? "no training comparisons" : "no usable validation comparisons");
            result.warnings.push_back(os.str());
            continue;
        }
        usable.push_back(std::move(sets));
    }
    if (usable.empty()) {
        throw ValidationError("cross_validate_beta: every fold was empty after filtering");
    }

    for (double beta : grid) {
        Hyperparams hp_beta = hp;
        hp_beta.beta = beta;
        double total = 0.0;
        for (const FoldSets& sets : usable) {
            total += evaluate_split(kernels, comparisons, sets.train, sets.val, hp_beta).gauc;
        }
        result.scores.push_back(
            BetaScore{beta, total / static_cast<double>(usable.size()),
                      static_cast<int>(usable.size())});
    }

    const BetaScore* best = &result.scores.front();
    for (const BetaScore& s : result.scores) {
        if (s.mean_gauc > best->mean_gauc) best = &s;  // ties keep the smaller beta
    }
    result.best_beta = best->beta;
    return result;
}

}  // namespace mkpoe
