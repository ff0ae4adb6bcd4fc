#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include <mkpoe/errors.hpp>

namespace mkpoe {

/// One item per row, one feature per column.
using FeatureTable = Eigen::MatrixXd;

/// n x n symmetric PSD similarity matrix for one view of the data.
using KernelMatrix = Eigen::MatrixXd;

// Relative tolerances for the KernelMatrix invariants.
inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPsdTol = 1e-8;

/// K[i][j] = <row i, row j>.
KernelMatrix linear_kernel(const FeatureTable& features);

/// K[i][j] = exp(-gamma * ||row i - row j||^2); gamma > 0.
KernelMatrix rbf_kernel(const FeatureTable& features, double gamma);

/// Radial basis function over the chi-squared distance between
/// nonnegative rows (histograms); a 0/0 summand counts as 0.
KernelMatrix chi2_rbf_kernel(const FeatureTable& features, double sigma);

/// K[i][j] = <i,j> / (||i|| * ||j||); rejects zero-norm rows.
KernelMatrix cosine_kernel(const FeatureTable& features);

/// Entrywise sum of same-size kernels.
KernelMatrix sum_kernel(const std::vector<KernelMatrix>& kernels);

struct KernelReport {
    int n = 0;
    double symmetry_residual = 0.0;  // max |K_ij - K_ji| / max(1, |K_ij|)
    double min_eigenvalue = 0.0;
    double max_abs_eigenvalue = 0.0;
    bool symmetric = false;
    bool psd = false;

    bool pass() const { return symmetric && psd; }
    std::string str() const;
};

/// Checks the KernelMatrix invariants and reports the residuals; failures
/// live in the report, not in exceptions.  Rejects non-square input.
KernelReport validate_kernel(const Eigen::MatrixXd& k);

/// i-th column of K; range-checked.
Eigen::VectorXd kernel_column(const KernelMatrix& k, int i);

// Plain-text formats.  Feature table: one item per row, whitespace
// separated.  Kernel: first line "n", then n rows of n numbers, 17
// significant digits (bit-identical round trip).
FeatureTable read_feature_table(std::istream& in);
FeatureTable read_feature_table_file(const std::string& path);
KernelMatrix read_kernel(std::istream& in);
KernelMatrix read_kernel_file(const std::string& path);
void write_kernel(std::ostream& out, const KernelMatrix& k);
void write_kernel_file(const std::string& path, const KernelMatrix& k);

}  // namespace mkpoe
