#include <mkpoe/kernel.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <mkpoe/textio.hpp>

namespace mkpoe {

namespace {

void require_finite(const FeatureTable& f, const char* op) {
    if (!f.allFinite()) {
        throw ValidationError(std::string(op) + ": feature table contains a non-finite entry");
    }
}

}  // namespace

KernelMatrix linear_kernel(const FeatureTable& features) {
    require_finite(features, "linear_kernel");
    return features * features.transpose();
}

KernelMatrix rbf_kernel(const FeatureTable& features, double gamma) {
    require_finite(features, "rbf_kernel");
    if (!(gamma > 0.0)) {
        throw ValidationError("rbf_kernel: gamma must be positive, got " + format_g17(gamma));
    }
    const Eigen::Index n = features.rows();
    KernelMatrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d2 = (features.row(i) - features.row(j)).squaredNorm();
            const double v = std::exp(-gamma * d2);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

KernelMatrix chi2_rbf_kernel(const FeatureTable& features, double sigma) {
    require_finite(features, "chi2_rbf_kernel");
    if (!(sigma > 0.0)) {
        throw ValidationError("chi2_rbf_kernel: sigma must be positive, got " + format_g17(sigma));
    }
    if ((features.array() < 0.0).any()) {
        throw ValidationError("chi2_rbf_kernel: rows must be nonnegative histograms");
    }
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    KernelMatrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            double chi2 = 0.0;
            for (Eigen::Index t = 0; t < d; ++t) {
                const double s = features(i, t) + features(j, t);
                if (s > 0.0) {
                    const double diff = features(i, t) - features(j, t);
                    chi2 += diff * diff / s;
                }
            }
            const double v = std::exp(-sigma * chi2);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

KernelMatrix cosine_kernel(const FeatureTable& features) {
    require_finite(features, "cosine_kernel");
    const Eigen::Index n = features.rows();
    Eigen::VectorXd norms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        norms(i) = features.row(i).norm();
        if (norms(i) == 0.0) {
            throw ValidationError("cosine_kernel: row " + std::to_string(i) + " has zero norm");
        }
    }
    KernelMatrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = features.row(i).dot(features.row(j)) / (norms(i) * norms(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

KernelMatrix sum_kernel(const std::vector<KernelMatrix>& kernels) {
    if (kernels.empty()) throw ValidationError("sum_kernel: empty kernel list");
    KernelMatrix out = kernels.front();
    for (std::size_t p = 1; p < kernels.size(); ++p) {
        if (kernels[p].rows() != out.rows() || kernels[p].cols() != out.cols()) {
            throw ValidationError("sum_kernel: kernel " + std::to_string(p) + " is " +
                                  std::to_string(kernels[p].rows()) + "x" +
                                  std::to_string(kernels[p].cols()) + ", expected " +
                                  std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
        }
        out += kernels[p];
    }
    return out;
}

std::string KernelReport::str() const {
    std::ostringstream os;
    os << "n=" << n << " symmetry_residual=" << format_g17(symmetry_residual)
       << " min_eigenvalue=" << format_g17(min_eigenvalue)
       << " max_abs_eigenvalue=" << format_g17(max_abs_eigenvalue)
       << " symmetric=" << (symmetric ? "pass" : "fail") << " psd=" << (psd ? "pass" : "fail");
    return os.str();
}

KernelReport validate_kernel(const Eigen::MatrixXd& k) {
    if (k.rows() != k.cols()) {
        throw ValidationError("validate_kernel: matrix is " + std::to_string(k.rows()) + "x" +
                              std::to_string(k.cols()) + ", expected square");
    }
    KernelReport report;
    report.n = static_cast<int>(k.rows());
    if (!k.allFinite()) {
        return report;  // symmetric=false, psd=false
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double rel =
                std::abs(k(i, j) - k(j, i)) / std::max(1.0, std::abs(k(i, j)));
            worst = std::max(worst, rel);
        }
    }
    report.symmetry_residual = worst;
    report.symmetric = worst <= kSymmetryTol;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (k + k.transpose()),
                                                       Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        return report;
    }
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    report.min_eigenvalue = lambda.size() ? lambda.minCoeff() : 0.0;
    report.max_abs_eigenvalue = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
    report.psd = report.min_eigenvalue >= -kPsdTol * report.max_abs_eigenvalue;
    return report;
}

Eigen::VectorXd kernel_column(const KernelMatrix& k, int i) {
    if (i < 0 || i >= k.cols()) {
        throw ValidationError("kernel_column: index " + std::to_string(i) + " out of range [0," +
                              std::to_string(k.cols()) + ")");
    }
    return k.col(i);
}

FeatureTable read_feature_table(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (!ls.eof()) throw ParseError("non-numeric token in feature row", lineno);
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("ragged feature table: expected " +
                                 std::to_string(rows.front().size()) + " columns, got " +
                                 std::to_string(row.size()),
                             lineno);
        }
        rows.push_back(std::move(row));
    }
    FeatureTable f(static_cast<Eigen::Index>(rows.size()),
                   rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return f;
}

FeatureTable read_feature_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open feature table: " + path);
    return read_feature_table(in);
}

KernelMatrix read_kernel(std::istream& in) {
    long long n = -1;
    if (!(in >> n) || n < 0) throw ParseError("expected item count on the first line", 1);
    KernelMatrix k(n, n);
    for (long long i = 0; i < n; ++i) {
        for (long long j = 0; j < n; ++j) {
            double v;
            if (!(in >> v)) {
                throw ParseError("kernel matrix truncated at row " + std::to_string(i),
                                 static_cast<int>(i + 2));
            }
            k(i, j) = v;
        }
    }
    return k;
}

KernelMatrix read_kernel_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open kernel file: " + path);
    return read_kernel(in);
}

void write_kernel(std::ostream& out, const KernelMatrix& k) {
    if (k.rows() != k.cols()) throw ValidationError("write_kernel: matrix must be square");
    out << k.rows() << '\n';
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            if (j) out << ' ';
            out << format_g17(k(i, j));
        }
        out << '\n';
    }
}

void write_kernel_file(const std::string& path, const KernelMatrix& k) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path);
    write_kernel(out, k);
}

}  // namespace mkpoe
