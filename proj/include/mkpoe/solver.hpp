#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <mkpoe/constraints.hpp>
#include <mkpoe/kernel.hpp>

namespace mkpoe {

enum class MetricMode { Full, Diagonal };

const char* to_string(MetricMode mode);
MetricMode metric_mode_from_string(const std::string& s);

/// Solver settings.  The comparison margin is fixed at 1; scale is
/// absorbed by the learned metrics.
struct Hyperparams {
    double beta = 1.0;     // regularization / loss trade-off, > 0
    int max_iter = 2000;   // > 0
    double step0 = 1.0;    // initial step size, > 0
    double tol = 1e-6;     // relative objective-change stop threshold, >= 0
    MetricMode mode = MetricMode::Full;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The optimization variables: one metric per kernel.  Full mode holds
/// symmetric PSD matrices; diagonal mode holds nonnegative diagonals.
struct MetricSet {
    MetricMode mode = MetricMode::Full;
    std::vector<Eigen::MatrixXd> full;
    std::vector<Eigen::VectorXd> diag;

    std::size_t count() const {
        return mode == MetricMode::Full ? full.size() : diag.size();
    }
    int dim(std::size_t p) const {
        return mode == MetricMode::Full ? static_cast<int>(full[p].rows())
                                        : static_cast<int>(diag[p].size());
    }
};

struct TraceRow {
    int iter = 0;
    double objective = 0.0;
    int violations = 0;
    double step = 0.0;
};

struct TraceLog {
    std::vector<TraceRow> rows;

    /// Delimited text: "iter objective violations step" per row.
    void write(std::ostream& out) const;
};

/// Objective blew up (non-finite, or past 10x its initial value); the
/// trace up to the abort rides along.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, TraceLog trace)
        : std::runtime_error(msg), trace_(std::move(trace)) {}
    const TraceLog& trace() const { return trace_; }

private:
    TraceLog trace_;
};

/// Squared distance between items i and j under the learned metrics:
/// sum_p (K^p_i - K^p_j)' W^p (K^p_i - K^p_j).
double pair_distance(const MetricSet& w, const std::vector<KernelMatrix>& kernels, int i, int j);

/// sum_p trace(W^p K^p) + (beta/|C|) sum_C max(0, 1 + d(i,j) - d(k,l)).
double objective(const MetricSet& w, const std::vector<KernelMatrix>& kernels,
                 const std::vector<Comparison>& comparisons, double beta);

/// Subgradient of the objective at w: per kernel,
/// K^p + (beta/|C|) K^p (sum over violated constraints of E_ij - E_kl) K^p,
/// where E_ij = (e_i-e_j)(e_i-e_j)' and "violated" means the hinge argument
/// is strictly positive.  Diagonal mode keeps only the diagonal.
MetricSet subgradient(const MetricSet& w, const std::vector<KernelMatrix>& kernels,
                      const std::vector<Comparison>& comparisons, double beta);

/// Nearest PSD matrix in Frobenius norm: symmetrize, then clamp the
/// eigenvalues at zero.  Idempotent; rejects non-finite input.
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& w);

/// Entrywise clamp at zero (the diagonal counterpart of psd_project).
Eigen::VectorXd diag_project(const Eigen::VectorXd& w);

struct TrainResult {
    MetricSet metrics;
    TraceLog trace;
};

/// Projected subgradient descent over one PSD metric per kernel.  Steps
/// shrink as step0 / ((1+t) * ||G||_F), with G the joint subgradient, so
/// the update scale does not depend on beta; iteration stops at max_iter
/// or when the best objective improves by less than tol (relative) over a
/// 10-iteration window.  Returns the iterate with the lowest recorded
/// objective, which for a subgradient method need not be the last.
TrainResult train(const std::vector<KernelMatrix>& kernels,
                  const std::vector<Comparison>& comparisons, const Hyperparams& hp);

/// Single-kernel special case of train.
TrainResult train_kpoe(const KernelMatrix& kernel, const std::vector<Comparison>& comparisons,
                       const Hyperparams& hp);

/// Identity-kernel special case: the metric directly encodes the Gram
/// matrix of the embedded points.
TrainResult train_gnmds(int n, const std::vector<Comparison>& comparisons, const Hyperparams& hp);

/// Linear variant: optimizes a single D x D metric over raw feature
/// differences, with trace(W) regularization.
TrainResult train_lpoe(const FeatureTable& features, const std::vector<Comparison>& comparisons,
                       const Hyperparams& hp);

}  // namespace mkpoe
