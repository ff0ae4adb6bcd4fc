#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include <mkpoe/kernel.hpp>
#include <mkpoe/solver.hpp>

namespace mkpoe {

/// Default absolute eigenvalue floor.  A relative floor of
/// 1e-10 * lambda_max per kernel always applies on top, so numerically
/// zero directions are dropped even at the default.
inline constexpr double kDefaultEigFloor = 0.0;

/// Spectral factorization of one learned metric W = V diag(lambda) V':
/// eigenvalues descending and clamped at zero, floored directions dropped,
/// projection N = lambda^{1/2} V' so that N'N reproduces W.
struct KernelFactor {
    Eigen::VectorXd eigenvalues;   // retained, descending
    Eigen::MatrixXd eigenvectors;  // input_dim x d, column q pairs with eigenvalues(q)
    Eigen::MatrixXd projection;    // d x input_dim
    int input_dim = 0;

    int retained_dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Factorized projections for every kernel plus the hyperparameters they
/// were trained with; immutable once built.
struct EmbeddingModel {
    static constexpr int kFormatVersion = 1;

    MetricMode mode = MetricMode::Full;
    std::vector<KernelFactor> factors;
    std::vector<std::string> kernel_names;  // provenance, one per kernel
    Hyperparams hp;                         // provenance

    int total_dim() const;
};

/// Per-kernel eigendecomposition of the metrics.  Eigenvalues at or below
/// max(eig_floor, 1e-10 * lambda_max) are dropped; negative ones (within
/// the PSD tolerance) are clamped first.  Diagonal metrics decompose
/// trivially onto basis vectors.
EmbeddingModel factorize(const MetricSet& metrics, double eig_floor = kDefaultEigFloor);

/// Coordinates of one out-of-sample point from its kernel evaluations
/// against the training set: concatenation over kernels of N^p * kcol_p.
Eigen::VectorXd embed_oos(const EmbeddingModel& model,
                          const std::vector<Eigen::VectorXd>& kernel_columns);

/// Coordinates of all training items (row per item): row i concatenates
/// N^p times column i of K^p.
Eigen::MatrixXd embed_train(const EmbeddingModel& model, const std::vector<KernelMatrix>& kernels);

// Versioned plain-text model format; value round trips are bit-identical.
void save_model(std::ostream& out, const EmbeddingModel& model);
void save_model_file(const std::string& path, const EmbeddingModel& model);
EmbeddingModel load_model(std::istream& in);
EmbeddingModel load_model_file(const std::string& path);

// Coordinates file: one item per row, space separated, 17 significant
// digits.
void write_coordinates(std::ostream& out, const Eigen::MatrixXd& coords);
void write_coordinates_file(const std::string& path, const Eigen::MatrixXd& coords);
Eigen::MatrixXd read_coordinates(std::istream& in);
Eigen::MatrixXd read_coordinates_file(const std::string& path);

}  // namespace mkpoe
