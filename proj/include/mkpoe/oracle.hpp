#pragma once

#include <Eigen/Dense>
#include <vector>

#include <mkpoe/constraints.hpp>

namespace mkpoe {

/// Reduces an acyclic comparison set over n items to a symmetric
/// dissimilarity matrix: pairs are visited in topological order of the
/// pair graph, sources get 1, every other pair gets one more than its
/// largest predecessor, and pairs absent from the graph get 1.  Throws
/// CycleError (with witness) on cyclic input.
Eigen::MatrixXd naive_total_order(const std::vector<Comparison>& comparisons, int n);

/// Double-centered Gram matrix A = -1/2 * H * delta * H with
/// H = I - (1/n) 11'.  Rows and columns of A sum to zero.
Eigen::MatrixXd classical_mds_gram(const Eigen::MatrixXd& delta);

/// Constant-shift embedding: subtracts the minimum eigenvalue from the
/// spectrum of A, making it PSD, and factors the result.  Returns n points
/// in R^{n-1} (rows) whose squared distances are
/// A_ii + A_jj - 2 A_ij - 2 lambda_min -- the shift adds a constant to all
/// squared distances and so preserves their order.
Eigen::MatrixXd constant_shift_embed(const Eigen::MatrixXd& gram);

/// Exact constructive embedding: any acyclic comparison set over n items
/// is realized in R^{n-1} with every comparison satisfied strictly.
Eigen::MatrixXd oracle_embed(const std::vector<Comparison>& comparisons, int n);

}  // namespace mkpoe
