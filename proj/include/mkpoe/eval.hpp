#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <mkpoe/constraints.hpp>
#include <mkpoe/embedding.hpp>
#include <mkpoe/kernel.hpp>
#include <mkpoe/solver.hpp>

namespace mkpoe {

/// Squared distance between two items, by index.
using DistanceFn = std::function<double(int, int)>;

/// Distance function over embedded coordinates (one item per row).
DistanceFn coordinate_distances(const Eigen::MatrixXd& coords);

/// Distances computed natively from a kernel: K_ii + K_jj - 2 K_ij.
DistanceFn native_kernel_distances(const KernelMatrix& kernel);

/// Fraction of comparisons with d(i,j) strictly less than d(k,l); ties
/// count as unsatisfied.  Rejects an empty comparison set.
double gauc(const DistanceFn& distance, const std::vector<Comparison>& comparisons);

/// Mean hinge loss (1/|C|) sum max(0, 1 + d(i,j) - d(k,l)); always at
/// least 1 - gauc.
double hinge_loss(const DistanceFn& distance, const std::vector<Comparison>& comparisons);

/// Keeps only comparisons of the triadic form (s,u,s,v) whose shared item
/// s is in the test set and whose other items u, v are both in the
/// training set, then prunes direct contradictions from the kept set.
std::vector<Comparison> filter_test_comparisons(const std::vector<Comparison>& comparisons,
                                                const std::vector<int>& train_items,
                                                const std::vector<int>& test_items);

/// Disjoint train/test item partition plus cross-validation settings.
struct SplitSpec {
    std::vector<int> train;
    std::vector<int> test;
    int folds = 5;
    std::uint64_t seed = 0;
};

/// Seeded random partition of items 0..n-1 into train and test.
SplitSpec make_split(int n, double test_fraction, std::uint64_t seed, int folds = 5);

/// One train-on-train/score-on-test run of the full protocol: restrict
/// comparisons and kernels to the training items, train, embed the
/// training items plus the held-out items (out of sample), and score the
/// filtered held-out comparisons.
struct SplitResult {
    double gauc = 0.0;
    double hinge = 0.0;
    int train_comparisons = 0;
    int test_comparisons = 0;
    MetricSet metrics;
    EmbeddingModel model;
};

SplitResult evaluate_split(const std::vector<KernelMatrix>& kernels,
                           const std::vector<Comparison>& comparisons,
                           const std::vector<int>& train_items,
                           const std::vector<int>& test_items, const Hyperparams& hp);

struct BetaScore {
    double beta = 0.0;
    double mean_gauc = 0.0;
    int folds_used = 0;
};

struct CrossValResult {
    double best_beta = 0.0;
    std::vector<BetaScore> scores;       // ascending beta
    std::vector<std::string> warnings;   // skipped folds etc.
};

/// Item-level k-fold sweep over the beta grid: each fold trains on the
/// comparisons internal to the other folds and scores the filtered
/// validation comparisons.  Returns the beta with the highest mean GAUC;
/// ties break toward the smaller beta.  Duplicate grid entries collapse;
/// folds with no usable comparisons are skipped with a warning, and if
/// every fold is skipped the sweep fails.
CrossValResult cross_validate_beta(const std::vector<KernelMatrix>& kernels,
                                   const std::vector<Comparison>& comparisons,
                                   std::vector<double> grid, int folds, const Hyperparams& hp);

}  // namespace mkpoe
