#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <mkpoe/constraints.hpp>
#include <mkpoe/embedding.hpp>
#include <mkpoe/eval.hpp>
#include <mkpoe/textio.hpp>

using namespace mkpoe;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path(MKPOE_TEST_TMPDIR) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "_stdout.txt";
    const fs::path err_file = dir / "_stderr.txt";
    const std::string cmd = std::string(MKPOE_CLI_PATH) + " " + args + " >" + out_file.string() +
                            " 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("graph subcommand reports per-stage counts") {
    const fs::path dir = fresh_dir("cli_graph");
    // chain with one redundant edge, one duplicate, one contradiction pair
    write_file(dir / "comps.txt",
               "0 1 2 3\n"
               "2 3 4 5\n"
               "0 1 4 5\n"   // implied by the chain
               "0 1 2 3\n"   // duplicate
               "6 7 8 9\n"
               "8 9 6 7\n"); // direct contradiction
    const fs::path out = dir / "out.txt";
    const CmdResult r = run_cli("graph " + (dir / "comps.txt").string() +
                                    " --prune-contradictions --max-acyclic 5 --reduce --stats -o " +
                                    out.string(),
                                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("input=6") != std::string::npos);
    CHECK(r.out.find("deduped=5") != std::string::npos);
    CHECK(r.out.find("after_prune=3") != std::string::npos);
    CHECK(r.out.find("after_max_acyclic=3") != std::string::npos);
    CHECK(r.out.find("after_reduce=2") != std::string::npos);
    CHECK(read_comparisons_file(out.string()).size() == 2);
}

TEST_CASE("graph --reduce on cyclic input fails with a witness") {
    const fs::path dir = fresh_dir("cli_graph_cycle");
    write_file(dir / "comps.txt", "0 1 2 3\n2 3 0 1\n");
    const CmdResult r =
        run_cli("graph " + (dir / "comps.txt").string() + " --reduce -o " +
                    (dir / "out.txt").string(),
                dir);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("cycle") != std::string::npos);
    CHECK(r.err.find("->") != std::string::npos);
}

TEST_CASE("clean input passes through the graph stage unchanged") {
    const fs::path dir = fresh_dir("cli_graph_clean");
    const std::string text = "0 1 2 3\n2 3 4 5\n";
    write_file(dir / "comps.txt", text);
    const fs::path out = dir / "out.txt";
    const CmdResult r = run_cli("graph " + (dir / "comps.txt").string() +
                                    " --prune-contradictions --max-acyclic 1 --reduce --stats -o " +
                                    out.string(),
                                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(out) == text);
    CHECK(r.out.find("input=2") != std::string::npos);
    CHECK(r.out.find("output=2") != std::string::npos);
}

TEST_CASE("oracle then eval closes the loop at gauc 1") {
    const fs::path dir = fresh_dir("cli_oracle");
    write_file(dir / "square.txt",
               "0 1 0 2\n0 1 1 3\n1 2 0 2\n1 2 1 3\n2 3 0 2\n2 3 1 3\n0 3 0 2\n0 3 1 3\n");
    const fs::path coords = dir / "coords.txt";
    CmdResult r = run_cli(
        "oracle " + (dir / "square.txt").string() + " --n 4 -o " + coords.string(), dir);
    REQUIRE(r.exit_code == 0);
    CHECK(read_coordinates_file(coords.string()).cols() == 3);

    r = run_cli("eval " + (dir / "square.txt").string() + " --coords " + coords.string(), dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("gauc=1\n") != std::string::npos);

    // cyclic input is rejected
    write_file(dir / "cyclic.txt", "0 1 2 3\n2 3 0 1\n");
    r = run_cli("oracle " + (dir / "cyclic.txt").string() + " --n 4", dir);
    CHECK(r.exit_code == 1);
}

TEST_CASE("eval scores reversed constraints at zero") {
    const fs::path dir = fresh_dir("cli_eval");
    write_file(dir / "coords.txt", "0\n1\n3\n");
    write_file(dir / "comps.txt", "0 2 0 1\n");
    const CmdResult r =
        run_cli("eval " + (dir / "comps.txt").string() + " --coords " +
                    (dir / "coords.txt").string(),
                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("gauc=0\n") != std::string::npos);
}

TEST_CASE("synth, train, embed, eval pipeline") {
    const fs::path dir = fresh_dir("cli_pipeline");
    write_file(dir / "tree.txt",
               "root\n"
               "  a\n"
               "    a1\n"
               "    a2\n"
               "  b\n"
               "    b1\n"
               "    b2\n");
    const fs::path data = dir / "data";
    CmdResult r = run_cli("synth --taxonomy " + (dir / "tree.txt").string() +
                              " --per-class 4 --kernels 0.2 --noise-kernels 1 --budget 200"
                              " --seed 7 --out " +
                              data.string(),
                          dir);
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(data / "comparisons.txt"));
    REQUIRE(fs::exists(data / "kernel_info_0.txt"));
    REQUIRE(fs::exists(data / "kernel_noise_0.txt"));

    const fs::path model = dir / "model.txt";
    r = run_cli("train " + (data / "comparisons.txt").string() + " --kernel " +
                    (data / "kernel_info_0.txt").string() +
                    " --beta 100 --mode diag --max-iter 150 -o " + model.string() + " --trace " +
                    (dir / "trace.txt").string(),
                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("model=") != std::string::npos);
    CHECK(fs::exists(dir / "trace.txt"));

    const fs::path coords = dir / "coords.txt";
    r = run_cli("embed " + model.string() + " --kernel " +
                    (data / "kernel_info_0.txt").string() + " -o " + coords.string(),
                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(read_coordinates_file(coords.string()).rows() == 16);

    r = run_cli("eval " + (data / "comparisons.txt").string() + " --coords " + coords.string(),
                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("gauc=") != std::string::npos);

    // out-of-sample columns equal to training columns reproduce the rows
    const Eigen::MatrixXd k = read_kernel_file((data / "kernel_info_0.txt").string());
    {
        std::ofstream cols(dir / "cols.txt");
        for (int i = 0; i < k.rows(); ++i) {
            for (int j = 0; j < 3; ++j) {
                if (j) cols << ' ';
                cols << format_g17(k(i, j));
            }
            cols << '\n';
        }
    }
    const fs::path oos = dir / "oos.txt";
    r = run_cli("embed " + model.string() + " --kernel-columns " + (dir / "cols.txt").string() +
                    " -o " + oos.string(),
                dir);
    REQUIRE(r.exit_code == 0);
    const Eigen::MatrixXd all = read_coordinates_file(coords.string());
    const Eigen::MatrixXd sub = read_coordinates_file(oos.string());
    REQUIRE(sub.rows() == 3);
    CHECK((sub - all.topRows(3)).norm() == 0.0);
}

TEST_CASE("train sweeps beta with --cv and reports the winner") {
    const fs::path dir = fresh_dir("cli_cv");
    write_file(dir / "tree.txt",
               "root\n"
               "  a\n"
               "  b\n"
               "  c\n");
    const fs::path data = dir / "data";
    CmdResult r = run_cli("synth --taxonomy " + (dir / "tree.txt").string() +
                              " --per-class 5 --kernels 0.1 --noise-kernels 0 --budget 150"
                              " --seed 3 --out " +
                              data.string(),
                          dir);
    REQUIRE(r.exit_code == 0);

    r = run_cli("train " + (data / "comparisons.txt").string() + " --kernel " +
                    (data / "kernel_info_0.txt").string() +
                    " --mode diag --max-iter 80 --seed 5 --cv 1,100:3 -o " +
                    (dir / "model.txt").string(),
                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("cv beta=1 ") != std::string::npos);
    CHECK(r.out.find("cv beta=100 ") != std::string::npos);
    CHECK(r.out.find("best_beta=") != std::string::npos);
}

TEST_CASE("gnmds via --identity-kernel") {
    const fs::path dir = fresh_dir("cli_gnmds");
    write_file(dir / "chain.txt", "0 1 0 2\n0 2 0 3\n0 3 0 4\n");
    const CmdResult r = run_cli("train " + (dir / "chain.txt").string() +
                                    " --identity-kernel 5 --beta 100 --max-iter 200 -o " +
                                    (dir / "model.txt").string(),
                                dir);
    REQUIRE(r.exit_code == 0);
    const EmbeddingModel model = load_model_file((dir / "model.txt").string());
    CHECK(model.factors.size() == 1);
    CHECK(model.factors[0].input_dim == 5);
}

TEST_CASE("config file sets hyperparameters and flags override it") {
    const fs::path dir = fresh_dir("cli_config");
    write_file(dir / "chain.txt", "0 1 0 2\n0 2 0 3\n");
    write_file(dir / "conf.ini", "[train]\nbeta=42\nmax-iter=50\n");

    const std::string common = "--config " + (dir / "conf.ini").string() + " train " +
                               (dir / "chain.txt").string() + " --identity-kernel 4 -o " +
                               (dir / "model.txt").string();
    CmdResult r = run_cli(common, dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("beta=42\n") != std::string::npos);
    CHECK(r.out.find("iterations=50\n") != std::string::npos);

    r = run_cli(common + " --beta 7", dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("beta=7\n") != std::string::npos);
}

TEST_CASE("eval report is stable under --seed") {
    const fs::path dir = fresh_dir("cli_eval_seed");
    write_file(dir / "coords.txt", "0\n1\n3\n");
    write_file(dir / "comps.txt", "0 1 0 2\n");
    const std::string base = "eval " + (dir / "comps.txt").string() + " --coords " +
                             (dir / "coords.txt").string();
    const CmdResult a = run_cli(base, dir);
    const CmdResult b = run_cli(base + " --seed 99", dir);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("solver divergence exits with the numerical-failure code") {
    const fs::path dir = fresh_dir("cli_divergence");
    // one overflow-scale kernel direction blows the first objective up
    write_file(dir / "kernel.txt", "3\n1e160 0 0\n0 1 0\n0 0 1\n");
    write_file(dir / "comps.txt", "0 1 1 2\n");
    const CmdResult r = run_cli("train " + (dir / "comps.txt").string() + " --kernel " +
                                    (dir / "kernel.txt").string() + " -o " +
                                    (dir / "model.txt").string(),
                                dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("embed with a missing kernel file fails cleanly") {
    const fs::path dir = fresh_dir("cli_embed_missing");
    write_file(dir / "chain.txt", "0 1 0 2\n");
    CmdResult r = run_cli("train " + (dir / "chain.txt").string() +
                              " --identity-kernel 3 --max-iter 20 -o " +
                              (dir / "model.txt").string(),
                          dir);
    REQUIRE(r.exit_code == 0);
    r = run_cli("embed " + (dir / "model.txt").string() + " --kernel " +
                    (dir / "nope.txt").string(),
                dir);
    CHECK(r.exit_code == 1);
}

TEST_CASE("exit codes distinguish validation from parse success") {
    const fs::path dir = fresh_dir("cli_errors");
    CHECK(run_cli("graph " + (dir / "missing.txt").string(), dir).exit_code == 1);

    write_file(dir / "bad.txt", "0 1 junk\n");
    CHECK(run_cli("graph " + (dir / "bad.txt").string(), dir).exit_code == 1);

    write_file(dir / "ok.txt", "0 1 2 3\n");
    CHECK(run_cli("graph " + (dir / "ok.txt").string(), dir).exit_code == 0);

    // unknown flag is a usage error, not a crash
    CHECK(run_cli("graph --no-such-flag", dir).exit_code != 0);
}

TEST_SUITE_END();
