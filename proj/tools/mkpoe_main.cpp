// Command-line front end: synthesize datasets, clean constraint graphs,
// train metrics, embed items, and score embeddings against comparisons.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <mkpoe/embedding.hpp>
#include <mkpoe/eval.hpp>
#include <mkpoe/graph.hpp>
#include <mkpoe/kernel.hpp>
#include <mkpoe/oracle.hpp>
#include <mkpoe/solver.hpp>
#include <mkpoe/synth.hpp>
#include <mkpoe/textio.hpp>

namespace fs = std::filesystem;
using namespace mkpoe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::vector<int> read_item_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open item list: " + path);
    std::vector<int> items;
    int x;
    while (in >> x) {
        if (x < 0) throw ValidationError("negative item index in " + path);
        items.push_back(x);
    }
    if (!in.eof()) throw ValidationError("non-integer token in item list " + path);
    return items;
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw ValidationError("cannot open output file: " + path);
    return file;
}

struct CvSpec {
    std::vector<double> grid;
    int folds = 0;
};

CvSpec parse_cv_spec(const std::string& spec) {
    const std::size_t colon = spec.rfind(':');
    if (colon == std::string::npos) {
        throw ValidationError("--cv expects GRID:FOLDS, e.g. 0.01,1,100:5");
    }
    CvSpec cv;
    std::istringstream gs(spec.substr(0, colon));
    std::string tok;
    while (std::getline(gs, tok, ',')) {
        try {
            cv.grid.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ValidationError("--cv: bad beta value '" + tok + "'");
        }
    }
    try {
        cv.folds = std::stoi(spec.substr(colon + 1));
    } catch (const std::exception&) {
        throw ValidationError("--cv: bad fold count '" + spec.substr(colon + 1) + "'");
    }
    if (cv.grid.empty()) throw ValidationError("--cv: empty beta grid");
    return cv;
}

// ---------------------------------------------------------------- graph

struct GraphArgs {
    std::string input;
    std::string output;
    bool prune = false;
    bool reduce = false;
    bool stats = false;
    std::uint64_t mas_seed = 0;
    bool mas = false;
};

int run_graph(const GraphArgs& args) {
    std::vector<Comparison> comps = read_comparisons_file(args.input);
    std::ostringstream report;
    report << "input=" << comps.size() << '\n';

    comps = canonical_dedup(comps);
    report << "deduped=" << comps.size() << '\n';

    if (args.prune) {
        comps = prune_direct_contradictions(comps);
        report << "after_prune=" << comps.size() << '\n';
    }
    if (args.mas) {
        comps = graph_to_comparisons(max_acyclic_subgraph(build_graph(comps), args.mas_seed));
        report << "after_max_acyclic=" << comps.size() << '\n';
    }
    if (args.reduce) {
        comps = graph_to_comparisons(transitive_reduction(build_graph(comps)));
        report << "after_reduce=" << comps.size() << '\n';
    }
    report << "output=" << comps.size() << '\n';

    if (!args.output.empty()) {
        write_comparisons_file(args.output, comps);
    } else {
        write_comparisons(std::cout, comps);
    }
    if (args.stats) std::cout << report.str();
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string comparisons;
    std::vector<std::string> kernel_files;
    int identity_n = 0;
    std::string model_out;
    std::string trace_out;
    std::string cv_spec;
    Hyperparams hp;
    std::string mode = "full";
};

int run_train(const TrainArgs& args) {
    TrainArgs a = args;
    a.hp.mode = metric_mode_from_string(a.mode);

    std::vector<KernelMatrix> kernels;
    std::vector<std::string> names;
    if (a.identity_n > 0) {
        if (!a.kernel_files.empty()) {
            throw ValidationError("--identity-kernel cannot be combined with --kernel");
        }
        kernels.push_back(Eigen::MatrixXd::Identity(a.identity_n, a.identity_n));
        names.push_back("identity");
    } else {
        if (a.kernel_files.empty()) {
            throw ValidationError("train needs --kernel FILE (repeatable) or --identity-kernel N");
        }
        for (const std::string& path : a.kernel_files) {
            kernels.push_back(read_kernel_file(path));
            names.push_back(fs::path(path).filename().string());
        }
    }
    const std::vector<Comparison> comps = read_comparisons_file(a.comparisons);

    if (!a.cv_spec.empty()) {
        const CvSpec cv = parse_cv_spec(a.cv_spec);
        const CrossValResult result =
            cross_validate_beta(kernels, comps, cv.grid, cv.folds, a.hp);
        for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
        for (const BetaScore& s : result.scores) {
            std::cout << "cv beta=" << format_g17(s.beta) << " mean_gauc=" << format_g17(s.mean_gauc)
                      << " folds=" << s.folds_used << '\n';
        }
        std::cout << "best_beta=" << format_g17(result.best_beta) << '\n';
        a.hp.beta = result.best_beta;
    }

    const TrainResult result = train(kernels, comps, a.hp);
    EmbeddingModel model = factorize(result.metrics);
    model.hp = a.hp;
    model.kernel_names = names;
    save_model_file(a.model_out, model);

    if (!a.trace_out.empty()) {
        std::ofstream trace(a.trace_out);
        if (!trace) throw ValidationError("cannot open trace file: " + a.trace_out);
        result.trace.write(trace);
    }

    double best = result.trace.rows.empty() ? 0.0 : result.trace.rows.front().objective;
    for (const TraceRow& r : result.trace.rows) best = std::min(best, r.objective);
    std::cout << "kernels=" << kernels.size() << '\n'
              << "comparisons=" << comps.size() << '\n'
              << "mode=" << to_string(a.hp.mode) << '\n'
              << "beta=" << format_g17(a.hp.beta) << '\n'
              << "iterations=" << result.trace.rows.size() << '\n'
              << "best_objective=" << format_g17(best) << '\n'
              << "embedding_dim=" << model.total_dim() << '\n'
              << "model=" << a.model_out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
    std::string model;
    std::vector<std::string> kernel_files;
    std::vector<std::string> column_files;
    std::string output;
};

int run_embed(const EmbedArgs& args) {
    const EmbeddingModel model = load_model_file(args.model);
    Eigen::MatrixXd coords;
    if (!args.kernel_files.empty() && !args.column_files.empty()) {
        throw ValidationError("embed takes --kernel or --kernel-columns, not both");
    }
    if (!args.kernel_files.empty()) {
        std::vector<KernelMatrix> kernels;
        for (const std::string& path : args.kernel_files) kernels.push_back(read_kernel_file(path));
        coords = embed_train(model, kernels);
    } else if (!args.column_files.empty()) {
        // each file holds kernel evaluations against the training set:
        // one row per training item, one column per new point
        std::vector<Eigen::MatrixXd> blocks;
        for (const std::string& path : args.column_files) {
            blocks.push_back(read_feature_table_file(path));
        }
        if (blocks.size() != model.factors.size()) {
            throw ValidationError("embed: got " + std::to_string(blocks.size()) +
                                  " column files for " + std::to_string(model.factors.size()) +
                                  " kernels");
        }
        const Eigen::Index count = blocks.front().cols();
        for (const Eigen::MatrixXd& b : blocks) {
            if (b.cols() != count) {
                throw ValidationError("embed: kernel-column files disagree on point count");
            }
        }
        coords.resize(count, model.total_dim());
        std::vector<Eigen::VectorXd> cols(blocks.size());
        for (Eigen::Index x = 0; x < count; ++x) {
            for (std::size_t p = 0; p < blocks.size(); ++p) cols[p] = blocks[p].col(x);
            coords.row(x) = embed_oos(model, cols).transpose();
        }
    } else {
        throw ValidationError("embed needs --kernel FILE... or --kernel-columns FILE...");
    }

    std::ofstream file;
    write_coordinates(open_or_stdout(file, args.output), coords);
    return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
    std::string comparisons;
    std::string coords_file;
    std::string model_file;
    std::vector<std::string> kernel_files;
    std::string filter_spec;
    std::string output;
    std::uint64_t seed = 0;  // accepted for interface uniformity; scoring is deterministic
};

int run_eval(const EvalArgs& args) {
    std::vector<Comparison> comps = read_comparisons_file(args.comparisons);

    Eigen::MatrixXd coords;
    if (!args.coords_file.empty()) {
        if (!args.model_file.empty()) {
            throw ValidationError("eval takes --coords or --model, not both");
        }
        coords = read_coordinates_file(args.coords_file);
    } else if (!args.model_file.empty()) {
        if (args.kernel_files.empty()) {
            throw ValidationError("eval with --model also needs --kernel FILE...");
        }
        const EmbeddingModel model = load_model_file(args.model_file);
        std::vector<KernelMatrix> kernels;
        for (const std::string& path : args.kernel_files) kernels.push_back(read_kernel_file(path));
        coords = embed_train(model, kernels);
    } else {
        throw ValidationError("eval needs --coords FILE or --model FILE");
    }

    if (!args.filter_spec.empty()) {
        const std::size_t comma = args.filter_spec.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("--filter-test expects TRAINFILE,TESTFILE");
        }
        const std::vector<int> train_items = read_item_list(args.filter_spec.substr(0, comma));
        const std::vector<int> test_items = read_item_list(args.filter_spec.substr(comma + 1));
        comps = filter_test_comparisons(comps, train_items, test_items);
    }
    for (const Comparison& c : comps) {
        if (c.i >= coords.rows() || c.j >= coords.rows() || c.k >= coords.rows() ||
            c.l >= coords.rows()) {
            throw ValidationError("eval: comparison references an item beyond the coordinates");
        }
    }

    const DistanceFn dist = coordinate_distances(coords);
    std::ofstream file;
    std::ostream& out = open_or_stdout(file, args.output);
    out << "comparisons=" << comps.size() << '\n'
        << "gauc=" << format_g17(gauc(dist, comps)) << '\n'
        << "hinge_loss=" << format_g17(hinge_loss(dist, comps)) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string taxonomy_file;
    int per_class = 20;
    std::string kernel_spec = "0.3,0.5";
    int noise_kernels = 3;
    int budget = 2000;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int run_synth(const SynthArgs& args) {
    const Taxonomy tax = Taxonomy::parse_file(args.taxonomy_file);
    if (args.per_class < 1) throw ValidationError("--per-class must be at least 1");
    if (args.noise_kernels < 0) throw ValidationError("--noise-kernels must be nonnegative");

    std::vector<double> noise_levels;
    std::istringstream ks(args.kernel_spec);
    std::string tok;
    while (std::getline(ks, tok, ',')) {
        try {
            noise_levels.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ValidationError("--kernels: bad noise level '" + tok + "'");
        }
    }
    if (noise_levels.empty()) throw ValidationError("--kernels: need at least one noise level");

    const std::vector<int> leaf_ids = tax.leaves();
    std::vector<int> labels;
    for (int leaf : leaf_ids) {
        for (int t = 0; t < args.per_class; ++t) labels.push_back(leaf);
    }
    const int n = static_cast<int>(labels.size());

    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);

    const std::vector<Comparison> comps =
        generate_comparisons(tax, labels, args.seed, args.budget);
    if (comps.empty()) {
        std::cerr << "warning: taxonomy admits no valid comparisons (single class?)\n";
    }
    write_comparisons_file((dir / "comparisons.txt").string(), comps);

    {
        std::ofstream items(dir / "items.txt");
        if (!items) throw ValidationError("cannot write items file");
        write_items(items, tax, labels);
    }

    // deterministic per-kernel seed derivation
    std::uint64_t sub_seed = args.seed;
    auto next_seed = [&sub_seed]() { return sub_seed += 0x9e3779b97f4a7c15ULL; };

    std::vector<std::string> kernel_lines;
    for (std::size_t p = 0; p < noise_levels.size(); ++p) {
        const KernelMatrix k = generate_informative_kernel(labels, tax, noise_levels[p], next_seed());
        const std::string name = "kernel_info_" + std::to_string(p) + ".txt";
        write_kernel_file((dir / name).string(), k);
        kernel_lines.push_back(name);
    }
    for (int p = 0; p < args.noise_kernels; ++p) {
        const KernelMatrix k = generate_noise_kernel(n, next_seed());
        const std::string name = "kernel_noise_" + std::to_string(p) + ".txt";
        write_kernel_file((dir / name).string(), k);
        kernel_lines.push_back(name);
    }

    std::ofstream meta(dir / "meta.txt");
    if (!meta) throw ValidationError("cannot write meta file");
    meta << "classes=" << leaf_ids.size() << '\n'
         << "per_class=" << args.per_class << '\n'
         << "items=" << n << '\n'
         << "budget=" << args.budget << '\n'
         << "comparisons=" << comps.size() << '\n'
         << "seed=" << args.seed << '\n';
    for (const std::string& k : kernel_lines) meta << "kernel=" << k << '\n';

    std::cout << "items=" << n << '\n'
              << "comparisons=" << comps.size() << '\n'
              << "kernels=" << kernel_lines.size() << '\n'
              << "out=" << args.out_dir << '\n';
    return kExitOk;
}

// --------------------------------------------------------------- oracle

struct OracleArgs {
    std::string comparisons;
    int n = 0;
    std::string output;
};

int run_oracle(const OracleArgs& args) {
    const std::vector<Comparison> comps = read_comparisons_file(args.comparisons);
    const int n = args.n > 0 ? args.n : item_count(comps);
    const Eigen::MatrixXd coords = oracle_embed(comps, n);
    std::ofstream file;
    write_coordinates(open_or_stdout(file, args.output), coords);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-kernel partial order embedding toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags take precedence");

    GraphArgs graph_args;
    CLI::App* graph_cmd =
        app.add_subcommand("graph", "Clean a comparison set via its pair graph");
    graph_cmd->add_option("input", graph_args.input, "comparisons file")->required();
    graph_cmd->add_option("-o,--output", graph_args.output, "processed comparisons file");
    graph_cmd->add_flag("--prune-contradictions", graph_args.prune,
                        "drop both members of directly contradictory pairs");
    CLI::Option* mas_opt = graph_cmd->add_option(
        "--max-acyclic", graph_args.mas_seed, "keep a maximal acyclic subset (greedy, seeded)");
    graph_cmd->add_flag("--reduce", graph_args.reduce, "take the transitive reduction");
    graph_cmd->add_flag("--stats", graph_args.stats, "print per-stage comparison counts");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Learn metrics from kernels and comparisons");
    train_cmd->add_option("comparisons", train_args.comparisons, "comparisons file")->required();
    train_cmd->add_option("--kernel", train_args.kernel_files, "kernel matrix file (repeatable)");
    train_cmd->add_option("--identity-kernel", train_args.identity_n,
                          "use the identity kernel of this size");
    train_cmd->add_option("--beta", train_args.hp.beta, "regularization/loss trade-off");
    train_cmd->add_option("--mode", train_args.mode, "metric shape: full or diag")
        ->check(CLI::IsMember({"full", "diag", "diagonal"}));
    train_cmd->add_option("--max-iter", train_args.hp.max_iter, "iteration cap");
    train_cmd->add_option("--step0", train_args.hp.step0, "initial step size");
    train_cmd->add_option("--tol", train_args.hp.tol, "relative objective-change stop threshold");
    train_cmd->add_option("--seed", train_args.hp.seed, "seed for cross-validation folds");
    train_cmd->add_option("--cv", train_args.cv_spec,
                          "sweep beta by cross-validation, GRID:FOLDS (e.g. 0.01,1,100:5)");
    train_cmd->add_option("-o,--output-model", train_args.model_out, "model file")->required();
    train_cmd->add_option("--trace", train_args.trace_out, "write the per-iteration trace here");

    EmbedArgs embed_args;
    CLI::App* embed_cmd = app.add_subcommand("embed", "Map items into the learned space");
    embed_cmd->add_option("model", embed_args.model, "model file")->required();
    embed_cmd->add_option("--kernel", embed_args.kernel_files,
                          "training kernel files (repeatable, embeds the training items)");
    embed_cmd->add_option("--kernel-columns", embed_args.column_files,
                          "out-of-sample kernel evaluations, one file per kernel "
                          "(training items as rows, new points as columns)");
    embed_cmd->add_option("-o,--output", embed_args.output, "coordinates file");

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score coordinates against comparisons");
    eval_cmd->add_option("comparisons", eval_args.comparisons, "comparisons file")->required();
    eval_cmd->add_option("--coords", eval_args.coords_file, "coordinates file");
    eval_cmd->add_option("--model", eval_args.model_file, "model file (needs --kernel)");
    eval_cmd->add_option("--kernel", eval_args.kernel_files, "kernel files for --model");
    eval_cmd->add_option("--filter-test", eval_args.filter_spec,
                         "TRAINFILE,TESTFILE: keep only held-out query comparisons");
    eval_cmd->add_option("--seed", eval_args.seed, "accepted for uniformity; scoring ignores it");
    eval_cmd->add_option("-o,--output", eval_args.output, "report file (default stdout)");

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic taxonomy dataset");
    synth_cmd->add_option("--taxonomy", synth_args.taxonomy_file, "indented taxonomy file")
        ->required();
    synth_cmd->add_option("--per-class", synth_args.per_class, "items per leaf class");
    synth_cmd->add_option("--kernels", synth_args.kernel_spec,
                          "informative kernel noise levels, comma separated");
    synth_cmd->add_option("--noise-kernels", synth_args.noise_kernels, "distractor kernel count");
    synth_cmd->add_option("--budget", synth_args.budget, "comparisons to sample before reduction");
    synth_cmd->add_option("--seed", synth_args.seed, "generator seed");
    synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();

    OracleArgs oracle_args;
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "Exact constructive embedding of an acyclic comparison set");
    oracle_cmd->add_option("comparisons", oracle_args.comparisons, "comparisons file")->required();
    oracle_cmd->add_option("--n", oracle_args.n, "item count (default: max index + 1)");
    oracle_cmd->add_option("-o,--output", oracle_args.output, "coordinates file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (graph_cmd->parsed()) {
            graph_args.mas = mas_opt->count() > 0;
            return run_graph(graph_args);
        }
        if (train_cmd->parsed()) return run_train(train_args);
        if (embed_cmd->parsed()) return run_embed(embed_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (oracle_cmd->parsed()) return run_oracle(oracle_args);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
