#include <mkpoe/solver.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <mkpoe/textio.hpp>

namespace mkpoe {

const char* to_string(MetricMode mode) {
    return mode == MetricMode::Full ? "full" : "diag";
}

MetricMode metric_mode_from_string(const std::string& s) {
    if (s == "full") return MetricMode::Full;
    if (s == "diag" || s == "diagonal") return MetricMode::Diagonal;
    throw ValidationError("unknown metric mode '" + s + "' (expected full or diag)");
}

void Hyperparams::validate() const {
    if (!(beta > 0.0)) throw ValidationError("beta must be positive, got " + format_g17(beta));
    if (max_iter <= 0) throw ValidationError("max_iter must be positive");
    if (!(step0 > 0.0)) throw ValidationError("step0 must be positive, got " + format_g17(step0));
    if (!(tol >= 0.0)) throw ValidationError("tol must be nonnegative, got " + format_g17(tol));
}

void TraceLog::write(std::ostream& out) const {
    out << "# iter objective violations step\n";
    for (const TraceRow& r : rows) {
        out << r.iter << ' ' << format_g17(r.objective) << ' ' << r.violations << ' '
            << format_g17(r.step) << '\n';
    }
}

namespace {

void check_metrics_match(const MetricSet& w, std::size_t m, int dim, const char* op) {
    if (w.count() != m) {
        throw ValidationError(std::string(op) + ": metric set has " + std::to_string(w.count()) +
                              " metrics for " + std::to_string(m) + " kernels");
    }
    for (std::size_t p = 0; p < m; ++p) {
        if (w.dim(p) != dim) {
            throw ValidationError(std::string(op) + ": metric " + std::to_string(p) + " has size " +
                                  std::to_string(w.dim(p)) + ", expected " + std::to_string(dim));
        }
    }
}

void check_same_size(const std::vector<KernelMatrix>& kernels, const char* op) {
    if (kernels.empty()) throw ValidationError(std::string(op) + ": no kernels given");
    const Eigen::Index n = kernels.front().rows();
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        if (kernels[p].rows() != n || kernels[p].cols() != n) {
            throw ValidationError(std::string(op) + ": kernel " + std::to_string(p) + " is " +
                                  std::to_string(kernels[p].rows()) + "x" +
                                  std::to_string(kernels[p].cols()) + ", expected " +
                                  std::to_string(n) + "x" + std::to_string(n));
        }
    }
}

void check_indices(const std::vector<Comparison>& comparisons, int n, const char* op) {
    for (std::size_t idx = 0; idx < comparisons.size(); ++idx) {
        const Comparison& c = comparisons[idx];
        if (c.i >= n || c.j >= n || c.k >= n || c.l >= n || c.i < 0 || c.j < 0 || c.k < 0 ||
            c.l < 0) {
            std::ostringstream os;
            os << op << ": comparison " << idx << " (" << c.i << "," << c.j << "," << c.k << ","
               << c.l << ") references an item outside [0," << n << ")";
            throw ValidationError(os.str());
        }
    }
}

double metric_distance(const MetricSet& w, const std::vector<KernelMatrix>& kernels, int i,
                       int j) {
    if (i == j) return 0.0;
    double d = 0.0;
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        const Eigen::VectorXd delta = kernels[p].col(i) - kernels[p].col(j);
        if (w.mode == MetricMode::Full) {
            d += delta.dot(w.full[p] * delta);
        } else {
            d += (delta.array().square() * w.diag[p].array()).sum();
        }
    }
    return d;
}

// Accumulates sum over violated constraints of E_ij - E_kl into a dense
// n x n matrix; violation decided by the current distances.
Eigen::MatrixXd violated_edge_matrix(const MetricSet& w, const std::vector<KernelMatrix>& kernels,
                                     const std::vector<Comparison>& comparisons) {
    const Eigen::Index n = kernels.front().rows();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (const Comparison& c : comparisons) {
        const double arg =
            1.0 + metric_distance(w, kernels, c.i, c.j) - metric_distance(w, kernels, c.k, c.l);
        if (arg > 0.0) {
            s(c.i, c.i) += 1.0;
            s(c.j, c.j) += 1.0;
            s(c.i, c.j) -= 1.0;
            s(c.j, c.i) -= 1.0;
            s(c.k, c.k) -= 1.0;
            s(c.l, c.l) -= 1.0;
            s(c.k, c.l) += 1.0;
            s(c.l, c.k) += 1.0;
        }
    }
    return s;
}

}  // namespace

double pair_distance(const MetricSet& w, const std::vector<KernelMatrix>& kernels, int i, int j) {
    check_same_size(kernels, "pair_distance");
    const int n = static_cast<int>(kernels.front().rows());
    check_metrics_match(w, kernels.size(), n, "pair_distance");
    if (i < 0 || i >= n || j < 0 || j >= n) {
        throw ValidationError("pair_distance: index out of range");
    }
    return metric_distance(w, kernels, i, j);
}

double objective(const MetricSet& w, const std::vector<KernelMatrix>& kernels,
                 const std::vector<Comparison>& comparisons, double beta) {
    check_same_size(kernels, "objective");
    const int n = static_cast<int>(kernels.front().rows());
    check_metrics_match(w, kernels.size(), n, "objective");
    if (comparisons.empty()) throw ValidationError("objective: empty comparison set");
    check_indices(comparisons, n, "objective");

    double reg = 0.0;
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        if (w.mode == MetricMode::Full) {
            reg += w.full[p].cwiseProduct(kernels[p]).sum();  // trace(WK), both symmetric
        } else {
            reg += w.diag[p].dot(kernels[p].diagonal());
        }
    }
    double loss = 0.0;
    for (const Comparison& c : comparisons) {
        const double arg =
            1.0 + metric_distance(w, kernels, c.i, c.j) - metric_distance(w, kernels, c.k, c.l);
        loss += std::max(0.0, arg);
    }
    return reg + beta / static_cast<double>(comparisons.size()) * loss;
}

MetricSet subgradient(const MetricSet& w, const std::vector<KernelMatrix>& kernels,
                      const std::vector<Comparison>& comparisons, double beta) {
    check_same_size(kernels, "subgradient");
    const int n = static_cast<int>(kernels.front().rows());
    check_metrics_match(w, kernels.size(), n, "subgradient");
    if (comparisons.empty()) throw ValidationError("subgradient: empty comparison set");
    check_indices(comparisons, n, "subgradient");

    const Eigen::MatrixXd s = violated_edge_matrix(w, kernels, comparisons);
    const double c = beta / static_cast<double>(comparisons.size());

    MetricSet g;
    g.mode = w.mode;
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        const Eigen::MatrixXd loss_term = kernels[p] * s * kernels[p];
        if (w.mode == MetricMode::Full) {
            g.full.push_back(kernels[p] + c * loss_term);
        } else {
            g.diag.push_back(kernels[p].diagonal() + c * loss_term.diagonal());
        }
    }
    return g;
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) throw ValidationError("psd_project: matrix must be square");
    if (!w.allFinite()) throw ValidationError("psd_project: matrix has non-finite entries");
    const Eigen::MatrixXd sym = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw ValidationError("psd_project: eigendecomposition failed");
    }
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Eigen::VectorXd diag_project(const Eigen::VectorXd& w) { return w.cwiseMax(0.0); }

namespace {

// One "view" per kernel: columns holds the per-item representation
// (kernel columns, or raw feature vectors for the linear variant), reg the
// regularizer matrix whose trace against W is penalized.
struct ProblemView {
    std::vector<Eigen::MatrixXd> columns;  // dim x n each
    std::vector<Eigen::MatrixXd> reg;      // dim x dim each
};

struct PairIndex {
    std::vector<std::pair<int, int>> items;          // pair id -> (i, j)
    std::vector<std::pair<int, int>> by_comparison;  // comparison -> (closer id, farther id)
};

PairIndex index_pairs(const std::vector<Comparison>& comparisons) {
    PairIndex idx;
    std::map<Pair, int> ids;
    auto intern = [&](int a, int b) {
        auto [it, fresh] = ids.emplace(Pair(a, b), static_cast<int>(idx.items.size()));
        if (fresh) idx.items.emplace_back(a, b);
        return it->second;
    };
    idx.by_comparison.reserve(comparisons.size());
    for (const Comparison& c : comparisons) {
        idx.by_comparison.emplace_back(intern(c.i, c.j), intern(c.k, c.l));
    }
    return idx;
}

MetricSet initial_metrics(MetricMode mode, const ProblemView& view) {
    const double m = static_cast<double>(view.columns.size());
    MetricSet w;
    w.mode = mode;
    for (const Eigen::MatrixXd& b : view.columns) {
        const Eigen::Index dim = b.rows();
        if (mode == MetricMode::Full) {
            w.full.push_back(Eigen::MatrixXd::Identity(dim, dim) / m);
        } else {
            w.diag.push_back(Eigen::VectorXd::Constant(dim, 1.0 / m));
        }
    }
    return w;
}

TrainResult run_subgradient(const ProblemView& view, const std::vector<Comparison>& comparisons,
                            const Hyperparams& hp) {
    hp.validate();
    if (comparisons.empty()) throw ValidationError("train: empty comparison set");
    const std::size_t m = view.columns.size();
    const int n = static_cast<int>(view.columns.front().cols());
    check_indices(comparisons, n, "train");

    const PairIndex pairs = index_pairs(comparisons);
    const std::size_t npairs = pairs.items.size();
    const double c_loss = hp.beta / static_cast<double>(comparisons.size());
    const bool diag_mode = hp.mode == MetricMode::Diagonal;

    // Per kernel and pair, the column difference (full mode) or its
    // entrywise square (diagonal mode); distances and the diagonal loss
    // gradient are linear in these.
    std::vector<Eigen::MatrixXd> pair_diff(m);
    for (std::size_t p = 0; p < m; ++p) {
        const Eigen::MatrixXd& b = view.columns[p];
        Eigen::MatrixXd d(b.rows(), static_cast<Eigen::Index>(npairs));
        for (std::size_t q = 0; q < npairs; ++q) {
            const auto [i, j] = pairs.items[q];
            d.col(static_cast<Eigen::Index>(q)) = b.col(i) - b.col(j);
        }
        pair_diff[p] = diag_mode ? d.array().square().matrix() : d;
    }
    std::vector<Eigen::VectorXd> reg_diag(m);
    for (std::size_t p = 0; p < m; ++p) reg_diag[p] = view.reg[p].diagonal();

    MetricSet w = initial_metrics(hp.mode, view);
    MetricSet best = w;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<double> best_history;
    TraceLog trace;
    double initial_objective = 0.0;

    Eigen::VectorXd dist(static_cast<Eigen::Index>(npairs));
    Eigen::VectorXd pair_coef(static_cast<Eigen::Index>(npairs));

    for (int iter = 0; iter < hp.max_iter; ++iter) {
        // distances of every constrained pair under the current metrics
        dist.setZero();
        for (std::size_t p = 0; p < m; ++p) {
            if (diag_mode) {
                dist.noalias() += pair_diff[p].transpose() * w.diag[p];
            } else {
                const Eigen::MatrixXd t = w.full[p] * view.columns[p];
                for (std::size_t q = 0; q < npairs; ++q) {
                    const auto [i, j] = pairs.items[q];
                    dist(static_cast<Eigen::Index>(q)) +=
                        pair_diff[p].col(static_cast<Eigen::Index>(q)).dot(t.col(i) - t.col(j));
                }
            }
        }

        double reg = 0.0;
        for (std::size_t p = 0; p < m; ++p) {
            reg += diag_mode ? w.diag[p].dot(reg_diag[p])
                             : w.full[p].cwiseProduct(view.reg[p]).sum();
        }
        // hinge loss; each violated constraint pushes its closer pair up
        // and its farther pair down in the shared coefficient vector
        pair_coef.setZero();
        double loss = 0.0;
        int violations = 0;
        for (std::size_t t = 0; t < comparisons.size(); ++t) {
            const auto [qc, qf] = pairs.by_comparison[t];
            const double arg = 1.0 + dist(qc) - dist(qf);
            if (arg > 0.0) {
                loss += arg;
                ++violations;
                pair_coef(qc) += 1.0;
                pair_coef(qf) -= 1.0;
            }
        }
        const double f = reg + c_loss * loss;
        trace.rows.push_back(TraceRow{iter, f, violations, 0.0});

        if (iter == 0) initial_objective = f;
        // the zero metric always scores exactly beta (every hinge at its
        // margin), so anything on that scale is a normal transient; the
        // guard only trips on genuine blow-ups
        const double limit = 10.0 * std::max({initial_objective, hp.beta, 1e-300});
        if (!std::isfinite(f) || f > limit) {
            throw DivergenceError("solver diverged at iteration " + std::to_string(iter) +
                                      ": objective " + format_g17(f) + " vs initial " +
                                      format_g17(initial_objective),
                                  std::move(trace));
        }
        if (f < best_objective) {
            best_objective = f;
            best = w;
        }
        best_history.push_back(best_objective);
        const std::size_t window = 10;
        if (best_history.size() > window) {
            const double before = best_history[best_history.size() - 1 - window];
            if (before - best_objective < hp.tol * std::max(1.0, std::abs(before))) break;
        }

        double grad_norm_sq = 0.0;
        std::vector<Eigen::MatrixXd> grad_full;
        std::vector<Eigen::VectorXd> grad_diag;
        if (diag_mode) {
            grad_diag.reserve(m);
            for (std::size_t p = 0; p < m; ++p) {
                Eigen::VectorXd g = reg_diag[p] + c_loss * (pair_diff[p] * pair_coef);
                grad_norm_sq += g.squaredNorm();
                grad_diag.push_back(std::move(g));
            }
        } else {
            Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
            for (std::size_t q = 0; q < npairs; ++q) {
                const double c = pair_coef(static_cast<Eigen::Index>(q));
                if (c == 0.0) continue;
                const auto [i, j] = pairs.items[q];
                s(i, i) += c;
                s(j, j) += c;
                s(i, j) -= c;
                s(j, i) -= c;
            }
            grad_full.reserve(m);
            for (std::size_t p = 0; p < m; ++p) {
                const Eigen::MatrixXd& b = view.columns[p];
                Eigen::MatrixXd g = view.reg[p] + c_loss * (b * s * b.transpose());
                grad_norm_sq += g.squaredNorm();
                grad_full.push_back(std::move(g));
            }
        }

        // diminishing step, normalized by the joint subgradient norm
        const double alpha =
            hp.step0 / (1.0 + iter) / std::max(1e-12, std::sqrt(grad_norm_sq));
        trace.rows.back().step = alpha;

        for (std::size_t p = 0; p < m; ++p) {
            if (diag_mode) {
                w.diag[p] = diag_project(w.diag[p] - alpha * grad_diag[p]);
            } else {
                w.full[p] = psd_project(w.full[p] - alpha * grad_full[p]);
            }
        }
    }

    return TrainResult{std::move(best), std::move(trace)};
}

}  // namespace

TrainResult train(const std::vector<KernelMatrix>& kernels,
                  const std::vector<Comparison>& comparisons, const Hyperparams& hp) {
    check_same_size(kernels, "train");
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        const KernelReport report = validate_kernel(kernels[p]);
        if (!report.pass()) {
            throw ValidationError("train: kernel " + std::to_string(p) +
                                  " failed validation: " + report.str());
        }
    }
    ProblemView view;
    view.columns = kernels;
    view.reg = kernels;
    return run_subgradient(view, comparisons, hp);
}

TrainResult train_kpoe(const KernelMatrix& kernel, const std::vector<Comparison>& comparisons,
                       const Hyperparams& hp) {
    return train(std::vector<KernelMatrix>{kernel}, comparisons, hp);
}

TrainResult train_gnmds(int n, const std::vector<Comparison>& comparisons, const Hyperparams& hp) {
    if (n <= 0) throw ValidationError("train_gnmds: item count must be positive");
    return train_kpoe(Eigen::MatrixXd::Identity(n, n), comparisons, hp);
}

TrainResult train_lpoe(const FeatureTable& features, const std::vector<Comparison>& comparisons,
                       const Hyperparams& hp) {
    if (!features.allFinite()) {
        throw ValidationError("train_lpoe: feature table contains a non-finite entry");
    }
    if (features.rows() == 0) throw ValidationError("train_lpoe: empty feature table");
    ProblemView view;
    view.columns.push_back(features.transpose());  // dim = D, one column per item
    view.reg.push_back(Eigen::MatrixXd::Identity(features.cols(), features.cols()));
    return run_subgradient(view, comparisons, hp);
}

}  // namespace mkpoe
