#include <mkpoe/oracle.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <mkpoe/graph.hpp>

namespace mkpoe {

Eigen::MatrixXd naive_total_order(const std::vector<Comparison>& comparisons, int n) {
    if (n < 0) throw ValidationError("naive_total_order: negative item count");
    for (std::size_t idx = 0; idx < comparisons.size(); ++idx) {
        const Comparison& c = comparisons[idx];
        if (c.i >= n || c.j >= n || c.k >= n || c.l >= n) {
            throw ValidationError("naive_total_order: comparison " + std::to_string(idx) +
                                  " references an item outside [0," + std::to_string(n) + ")");
        }
    }
    const PairGraph g = build_graph(comparisons);
    const std::vector<int> order = topological_order(g);  // throws CycleError

    // unconstrained pairs sit at the in-degree-0 base value
    Eigen::MatrixXd delta = Eigen::MatrixXd::Ones(n, n);
    delta.diagonal().setZero();

    for (int v : order) {
        double value = 1.0;
        for (int p : g.predecessors(v)) {
            const Pair& pred = g.vertex(p);
            value = std::max(value, delta(pred.a, pred.b) + 1.0);
        }
        const Pair& pr = g.vertex(v);
        delta(pr.a, pr.b) = value;
        delta(pr.b, pr.a) = value;
    }
    return delta;
}

Eigen::MatrixXd classical_mds_gram(const Eigen::MatrixXd& delta) {
    if (delta.rows() != delta.cols()) {
        throw ValidationError("classical_mds_gram: matrix must be square");
    }
    if (!delta.allFinite()) {
        throw ValidationError("classical_mds_gram: matrix has non-finite entries");
    }
    const Eigen::Index n = delta.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(delta(i, i)) > 1e-12) {
            throw ValidationError("classical_mds_gram: nonzero diagonal at " + std::to_string(i));
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (delta(i, j) < 0.0) {
                throw ValidationError("classical_mds_gram: negative dissimilarity at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (std::abs(delta(i, j) - delta(j, i)) >
                1e-12 * std::max(1.0, std::abs(delta(i, j)))) {
                throw ValidationError("classical_mds_gram: matrix is not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    if (n == 0) return Eigen::MatrixXd(0, 0);

    // -1/2 H delta H, written out via row/column/grand means
    const Eigen::VectorXd row_mean = delta.rowwise().mean();
    const double grand_mean = delta.mean();
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = -0.5 * (delta(i, j) - row_mean(i) - row_mean(j) + grand_mean);
        }
    }
    return a;
}

Eigen::MatrixXd constant_shift_embed(const Eigen::MatrixXd& gram) {
    if (gram.rows() != gram.cols()) {
        throw ValidationError("constant_shift_embed: matrix must be square");
    }
    if (!gram.allFinite()) {
        throw ValidationError("constant_shift_embed: matrix has non-finite entries");
    }
    const Eigen::Index n = gram.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(gram(i, j) - gram(j, i)) > 1e-10 * std::max(1.0, std::abs(gram(i, j)))) {
                throw ValidationError("constant_shift_embed: matrix is not symmetric");
            }
        }
    }
    if (n == 0) return Eigen::MatrixXd(0, 0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (gram + gram.transpose()));
    if (eig.info() != Eigen::Success) {
        throw ValidationError("constant_shift_embed: eigendecomposition failed");
    }
    const double lambda_min = eig.eigenvalues().minCoeff();

    // Eigen sorts ascending; column q of the output takes the (q+1)-largest
    // shifted eigenvalue.  The smallest shifts to exactly zero and is the
    // dimension dropped.
    Eigen::MatrixXd points(n, n - 1);
    for (Eigen::Index q = 0; q < n - 1; ++q) {
        const Eigen::Index src = n - 1 - q;
        const double shifted = std::max(0.0, eig.eigenvalues()(src) - lambda_min);
        points.col(q) = std::sqrt(shifted) * eig.eigenvectors().col(src);
    }
    return points;
}

Eigen::MatrixXd oracle_embed(const std::vector<Comparison>& comparisons, int n) {
    return constant_shift_embed(classical_mds_gram(naive_total_order(comparisons, n)));
}

}  // namespace mkpoe
