#include <mkpoe/embedding.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <mkpoe/textio.hpp>

namespace mkpoe {

int EmbeddingModel::total_dim() const {
    int d = 0;
    for (const KernelFactor& f : factors) d += f.retained_dim();
    return d;
}

namespace {

KernelFactor factor_from_spectrum(Eigen::VectorXd lambda, Eigen::MatrixXd vectors,
                                  double eig_floor, std::size_t index) {
    const Eigen::Index dim = vectors.rows();
    const double lambda_max = lambda.size() ? lambda.maxCoeff() : 0.0;
    const double lambda_abs = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
    if (lambda.size() && lambda.minCoeff() < -kPsdTol * std::max(1e-300, lambda_abs)) {
        throw ValidationError("factorize: metric " + std::to_string(index) +
                              " is not PSD within tolerance (min eigenvalue " +
                              format_g17(lambda.minCoeff()) + ")");
    }
    const double floor = std::max(eig_floor, 1e-10 * std::max(0.0, lambda_max));

    // sort descending, clamp, drop floored directions
    std::vector<int> order(static_cast<std::size_t>(lambda.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return lambda(a) > lambda(b); });

    std::vector<int> kept;
    for (int q : order) {
        if (std::max(lambda(q), 0.0) > floor) kept.push_back(q);
    }
    KernelFactor f;
    f.input_dim = static_cast<int>(dim);
    f.eigenvalues.resize(static_cast<Eigen::Index>(kept.size()));
    f.eigenvectors.resize(dim, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t t = 0; t < kept.size(); ++t) {
        f.eigenvalues(static_cast<Eigen::Index>(t)) = std::max(lambda(kept[t]), 0.0);
        f.eigenvectors.col(static_cast<Eigen::Index>(t)) = vectors.col(kept[t]);
    }
    f.projection = f.eigenvalues.cwiseSqrt().asDiagonal() * f.eigenvectors.transpose();
    return f;
}

}  // namespace

EmbeddingModel factorize(const MetricSet& metrics, double eig_floor) {
    if (!(eig_floor >= 0.0)) throw ValidationError("factorize: eig_floor must be nonnegative");
    EmbeddingModel model;
    model.mode = metrics.mode;
    for (std::size_t p = 0; p < metrics.count(); ++p) {
        if (metrics.mode == MetricMode::Full) {
            const Eigen::MatrixXd& w = metrics.full[p];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (w + w.transpose()));
            if (eig.info() != Eigen::Success) {
                throw ValidationError("factorize: eigendecomposition failed for metric " +
                                      std::to_string(p));
            }
            model.factors.push_back(
                factor_from_spectrum(eig.eigenvalues(), eig.eigenvectors(), eig_floor, p));
        } else {
            const Eigen::VectorXd& w = metrics.diag[p];
            model.factors.push_back(factor_from_spectrum(
                w, Eigen::MatrixXd::Identity(w.size(), w.size()), eig_floor, p));
        }
        model.kernel_names.push_back("kernel" + std::to_string(p));
    }
    return model;
}

Eigen::VectorXd embed_oos(const EmbeddingModel& model,
                          const std::vector<Eigen::VectorXd>& kernel_columns) {
    if (kernel_columns.size() != model.factors.size()) {
        throw ValidationError("embed_oos: got " + std::to_string(kernel_columns.size()) +
                              " kernel columns for " + std::to_string(model.factors.size()) +
                              " kernels");
    }
    Eigen::VectorXd out(model.total_dim());
    Eigen::Index at = 0;
    for (std::size_t p = 0; p < model.factors.size(); ++p) {
        const KernelFactor& f = model.factors[p];
        if (kernel_columns[p].size() != f.input_dim) {
            throw ValidationError("embed_oos: kernel column " + std::to_string(p) + " has length " +
                                  std::to_string(kernel_columns[p].size()) + ", expected " +
                                  std::to_string(f.input_dim));
        }
        out.segment(at, f.retained_dim()).noalias() = f.projection * kernel_columns[p];
        at += f.retained_dim();
    }
    return out;
}

Eigen::MatrixXd embed_train(const EmbeddingModel& model,
                            const std::vector<KernelMatrix>& kernels) {
    if (kernels.size() != model.factors.size()) {
        throw ValidationError("embed_train: got " + std::to_string(kernels.size()) +
                              " kernels for " + std::to_string(model.factors.size()) + " factors");
    }
    if (kernels.empty()) return Eigen::MatrixXd(0, 0);
    const Eigen::Index n = kernels.front().cols();
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        if (kernels[p].rows() != model.factors[p].input_dim || kernels[p].cols() != n) {
            throw ValidationError("embed_train: kernel " + std::to_string(p) +
                                  " shape does not match the model");
        }
    }
    Eigen::MatrixXd coords(n, model.total_dim());
    std::vector<Eigen::VectorXd> cols(kernels.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < kernels.size(); ++p) cols[p] = kernels[p].col(i);
        coords.row(i) = embed_oos(model, cols).transpose();
    }
    return coords;
}

namespace {

std::string sanitize_name(const std::string& name) {
    std::string out = name.empty() ? "kernel" : name;
    for (char& c : out) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = '_';
    }
    return out;
}

// Line-oriented reader that tracks line numbers for error reporting.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::istringstream next(const std::string& what) {
        std::string line;
        if (!std::getline(in_, line)) {
            throw ParseError("unexpected end of model file while reading " + what, lineno_);
        }
        ++lineno_;
        return std::istringstream(line);
    }

    int lineno() const { return lineno_; }

private:
    std::istream& in_;
    int lineno_ = 0;
};

template <typename T>
T expect(std::istringstream& ls, const std::string& what, int lineno) {
    T value;
    if (!(ls >> value)) throw ParseError("malformed " + what, lineno);
    return value;
}

void expect_key(std::istringstream& ls, const std::string& key, int lineno) {
    std::string k;
    if (!(ls >> k) || k != key) {
        throw ParseError("expected '" + key + "' field", lineno);
    }
}

}  // namespace

void save_model(std::ostream& out, const EmbeddingModel& model) {
    out << "mkpoe-model " << EmbeddingModel::kFormatVersion << '\n';
    out << "mode " << to_string(model.mode) << '\n';
    out << "kernels " << model.factors.size() << '\n';
    out << "n " << (model.factors.empty() ? 0 : model.factors.front().input_dim) << '\n';
    out << "dims";
    for (const KernelFactor& f : model.factors) out << ' ' << f.retained_dim();
    out << '\n';
    out << "beta " << format_g17(model.hp.beta) << '\n';
    out << "max_iter " << model.hp.max_iter << '\n';
    out << "step0 " << format_g17(model.hp.step0) << '\n';
    out << "tol " << format_g17(model.hp.tol) << '\n';
    out << "seed " << model.hp.seed << '\n';
    for (std::size_t p = 0; p < model.factors.size(); ++p) {
        const KernelFactor& f = model.factors[p];
        const std::string name =
            p < model.kernel_names.size() ? sanitize_name(model.kernel_names[p]) : "kernel";
        out << "kernel " << p << ' ' << name << ' ' << f.input_dim << ' ' << f.retained_dim()
            << '\n';
        out << "lambda";
        for (Eigen::Index q = 0; q < f.eigenvalues.size(); ++q) {
            out << ' ' << format_g17(f.eigenvalues(q));
        }
        out << '\n';
        for (Eigen::Index q = 0; q < f.retained_dim(); ++q) {
            for (Eigen::Index t = 0; t < f.input_dim; ++t) {
                if (t) out << ' ';
                out << format_g17(f.eigenvectors(t, q));
            }
            out << '\n';
        }
    }
}

void save_model_file(const std::string& path, const EmbeddingModel& model) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path);
    save_model(out, model);
}

EmbeddingModel load_model(std::istream& in) {
    LineReader reader(in);

    auto header = reader.next("header");
    std::string magic;
    int version = -1;
    if (!(header >> magic >> version) || magic != "mkpoe-model") {
        throw ParseError("not a model file (missing 'mkpoe-model' header)", reader.lineno());
    }
    if (version != EmbeddingModel::kFormatVersion) {
        throw ValidationError("unsupported model format version " + std::to_string(version) +
                              " (expected " + std::to_string(EmbeddingModel::kFormatVersion) +
                              ")");
    }

    EmbeddingModel model;
    {
        auto ls = reader.next("mode");
        expect_key(ls, "mode", reader.lineno());
        model.mode = metric_mode_from_string(expect<std::string>(ls, "mode", reader.lineno()));
    }
    std::size_t m = 0;
    {
        auto ls = reader.next("kernel count");
        expect_key(ls, "kernels", reader.lineno());
        m = expect<std::size_t>(ls, "kernel count", reader.lineno());
    }
    {
        auto ls = reader.next("n");
        expect_key(ls, "n", reader.lineno());
        expect<int>(ls, "n", reader.lineno());
    }
    std::vector<int> dims(m);
    {
        auto ls = reader.next("dims");
        expect_key(ls, "dims", reader.lineno());
        for (std::size_t p = 0; p < m; ++p) dims[p] = expect<int>(ls, "dims", reader.lineno());
    }
    {
        auto ls = reader.next("beta");
        expect_key(ls, "beta", reader.lineno());
        model.hp.beta = expect<double>(ls, "beta", reader.lineno());
    }
    {
        auto ls = reader.next("max_iter");
        expect_key(ls, "max_iter", reader.lineno());
        model.hp.max_iter = expect<int>(ls, "max_iter", reader.lineno());
    }
    {
        auto ls = reader.next("step0");
        expect_key(ls, "step0", reader.lineno());
        model.hp.step0 = expect<double>(ls, "step0", reader.lineno());
    }
    {
        auto ls = reader.next("tol");
        expect_key(ls, "tol", reader.lineno());
        model.hp.tol = expect<double>(ls, "tol", reader.lineno());
    }
    {
        auto ls = reader.next("seed");
        expect_key(ls, "seed", reader.lineno());
        model.hp.seed = expect<std::uint64_t>(ls, "seed", reader.lineno());
    }
    model.hp.mode = model.mode;

    for (std::size_t p = 0; p < m; ++p) {
        auto ls = reader.next("kernel header");
        expect_key(ls, "kernel", reader.lineno());
        const std::size_t index = expect<std::size_t>(ls, "kernel index", reader.lineno());
        if (index != p) throw ParseError("kernel blocks out of order", reader.lineno());
        const std::string name = expect<std::string>(ls, "kernel name", reader.lineno());
        const int input_dim = expect<int>(ls, "kernel input dim", reader.lineno());
        const int d = expect<int>(ls, "kernel retained dim", reader.lineno());
        if (d != dims[p]) throw ParseError("kernel dim disagrees with header dims", reader.lineno());
        if (input_dim < 0 || d < 0 || d > input_dim) {
            throw ParseError("invalid kernel dimensions", reader.lineno());
        }

        KernelFactor f;
        f.input_dim = input_dim;
        f.eigenvalues.resize(d);
        {
            auto lam = reader.next("lambda");
            expect_key(lam, "lambda", reader.lineno());
            for (int q = 0; q < d; ++q) {
                f.eigenvalues(q) = expect<double>(lam, "lambda value", reader.lineno());
                if (!(f.eigenvalues(q) >= 0.0)) {
                    throw ParseError("negative eigenvalue in model", reader.lineno());
                }
            }
        }
        f.eigenvectors.resize(input_dim, d);
        for (int q = 0; q < d; ++q) {
            auto row = reader.next("eigenvector row");
            for (int t = 0; t < input_dim; ++t) {
                f.eigenvectors(t, q) = expect<double>(row, "eigenvector value", reader.lineno());
            }
        }
        f.projection = f.eigenvalues.cwiseSqrt().asDiagonal() * f.eigenvectors.transpose();
        model.factors.push_back(std::move(f));
        model.kernel_names.push_back(name);
    }
    return model;
}

EmbeddingModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file: " + path);
    return load_model(in);
}

void write_coordinates(std::ostream& out, const Eigen::MatrixXd& coords) {
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        for (Eigen::Index j = 0; j < coords.cols(); ++j) {
            if (j) out << ' ';
            out << format_g17(coords(i, j));
        }
        out << '\n';
    }
}

void write_coordinates_file(const std::string& path, const Eigen::MatrixXd& coords) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path);
    write_coordinates(out, coords);
}

Eigen::MatrixXd read_coordinates(std::istream& in) { return read_feature_table(in); }

Eigen::MatrixXd read_coordinates_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open coordinates file: " + path);
    return read_coordinates(in);
}

}  // namespace mkpoe
