// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// anything fails.  Heavier end-to-end runs live here rather than in the
// unit suites.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <mkpoe/embedding.hpp>
#include <mkpoe/eval.hpp>
#include <mkpoe/graph.hpp>
#include <mkpoe/kernel.hpp>
#include <mkpoe/oracle.hpp>
#include <mkpoe/rng.hpp>
#include <mkpoe/solver.hpp>
#include <mkpoe/synth.hpp>
#include <mkpoe/textio.hpp>

#include "support/graph_oracles.hpp"
#include "support/jacobi.hpp"

using namespace mkpoe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " (" << name << "): "
              << detail << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// ------------------------------------------------------------- fixtures

std::vector<Comparison> square_fixture() {
    std::vector<Comparison> comps;
    for (const Pair& s : {Pair(0, 1), Pair(1, 2), Pair(2, 3), Pair(0, 3)}) {
        for (const Pair& d : {Pair(0, 2), Pair(1, 3)}) {
            comps.push_back(Comparison{s.a, s.b, d.a, d.b});
        }
    }
    return comps;
}

// acyclic by construction: edges respect a random strict priority over
// the canonical pairs
std::vector<Comparison> random_acyclic_comparisons(int n, int count, Rng& rng) {
    std::vector<Pair> pairs;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    }
    std::vector<int> priority(pairs.size());
    for (std::size_t t = 0; t < pairs.size(); ++t) priority[t] = static_cast<int>(t);
    rng.shuffle(priority);

    std::set<std::pair<int, int>> used;
    std::vector<Comparison> comps;
    while (static_cast<int>(comps.size()) < count) {
        const int x = rng.index(pairs.size());
        const int y = rng.index(pairs.size());
        if (x == y) continue;
        const bool fwd =
            priority[static_cast<std::size_t>(x)] < priority[static_cast<std::size_t>(y)];
        const int from = fwd ? x : y;
        const int to = fwd ? y : x;
        if (!used.insert({from, to}).second) continue;
        const Pair& p = pairs[static_cast<std::size_t>(from)];
        const Pair& q = pairs[static_cast<std::size_t>(to)];
        comps.push_back(Comparison{p.a, p.b, q.a, q.b});
    }
    return comps;
}

KernelMatrix random_psd_kernel(int n, Rng& rng) {
    Eigen::MatrixXd f(n, n + 2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n + 2; ++j) f(i, j) = rng.gaussian();
    }
    return f * f.transpose();
}

std::vector<Comparison> random_comparisons(int n, int count, Rng& rng) {
    std::vector<Comparison> comps;
    while (static_cast<int>(comps.size()) < count) {
        Comparison c{rng.index(static_cast<std::size_t>(n)), rng.index(static_cast<std::size_t>(n)),
                     rng.index(static_cast<std::size_t>(n)), rng.index(static_cast<std::size_t>(n))};
        if (c.i == c.j || c.k == c.l || c.closer() == c.farther()) continue;
        comps.push_back(c);
    }
    return comps;
}

// --------------------------------------------------------- criterion 1

void criterion_oracle_completeness() {
    const auto start = Clock::now();
    Rng rng(2024);
    int perfect = 0;
    const int sets = 50;
    for (int trial = 0; trial < sets; ++trial) {
        const std::vector<Comparison> comps = random_acyclic_comparisons(20, 200, rng);
        const Eigen::MatrixXd points = oracle_embed(comps, 20);
        if (gauc(coordinate_distances(points), comps) == 1.0) ++perfect;
    }
    const std::vector<Comparison> square = square_fixture();
    const bool square_ok =
        gauc(coordinate_distances(oracle_embed(square, 4)), square) == 1.0;
    const double elapsed = seconds_since(start);

    std::ostringstream detail;
    detail << perfect << "/" << sets << " random acyclic sets at GAUC 1.0, square fixture "
           << (square_ok ? "exact" : "VIOLATED") << ", " << format_g17(elapsed) << "s";
    report(1, "oracle completeness", perfect == sets && square_ok && elapsed < 10.0,
           detail.str());
}

// --------------------------------------------------------- criterion 2

void criterion_gradient_correctness() {
    Rng rng(515);
    const double h = 1e-6;
    int instances = 0;
    double worst_rel = 0.0;
    while (instances < 100) {
        const int n = 3 + static_cast<int>(rng.below(5));
        const std::vector<KernelMatrix> ks{random_psd_kernel(n, rng)};
        const std::vector<Comparison> comps = random_comparisons(n, 6, rng);
        const double beta = 1.0 + 4.0 * rng.uniform();

        MetricSet wf;
        wf.mode = MetricMode::Full;
        {
            Eigen::MatrixXd a(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) a(i, j) = rng.gaussian();
            }
            wf.full.push_back(psd_project(0.5 * (a + a.transpose())));
        }
        MetricSet wd;
        wd.mode = MetricMode::Diagonal;
        {
            Eigen::VectorXd v(n);
            for (int t = 0; t < n; ++t) v(t) = 0.3 + rng.uniform();
            wd.diag.push_back(v);
        }
        // keep instances where every hinge sits clear of its kink in both
        // parameterizations
        bool kink = false;
        for (const Comparison& c : comps) {
            for (const MetricSet* w : {&wf, &wd}) {
                const double arg =
                    1.0 + pair_distance(*w, ks, c.i, c.j) - pair_distance(*w, ks, c.k, c.l);
                kink = kink || std::abs(arg) < 1e-3;
            }
        }
        if (kink) continue;
        ++instances;

        const MetricSet gf = subgradient(wf, ks, comps, beta);
        for (int probe = 0; probe < 5; ++probe) {
            const int a = rng.index(static_cast<std::size_t>(n));
            const int b = rng.index(static_cast<std::size_t>(n));
            MetricSet plus = wf, minus = wf;
            plus.full[0](a, b) += h;
            minus.full[0](a, b) -= h;
            const double fd =
                (objective(plus, ks, comps, beta) - objective(minus, ks, comps, beta)) / (2.0 * h);
            const double g = gf.full[0](a, b);
            worst_rel = std::max(worst_rel,
                                 std::abs(g - fd) / std::max(1e-12, std::abs(fd)));
        }

        const MetricSet gd = subgradient(wd, ks, comps, beta);
        for (int t = 0; t < n; ++t) {
            MetricSet plus = wd, minus = wd;
            plus.diag[0](t) += h;
            minus.diag[0](t) -= h;
            const double fd =
                (objective(plus, ks, comps, beta) - objective(minus, ks, comps, beta)) / (2.0 * h);
            worst_rel = std::max(
                worst_rel, std::abs(gd.diag[0](t) - fd) / std::max(1e-12, std::abs(fd)));
        }
    }
    std::ostringstream detail;
    detail << instances << " instances, full+diagonal, worst relative error "
           << format_g17(worst_rel) << " (limit 1e-4)";
    report(2, "gradient correctness", worst_rel < 1e-4, detail.str());
}

// --------------------------------------------------------- criterion 3

void criterion_projection_correctness() {
    Rng rng(808);
    double worst_gap = 0.0;
    double worst_idem = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(8));  // 3..10
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) a(i, j) = 2.0 * rng.gaussian();
        }
        a = (0.5 * (a + a.transpose())).eval();
        const Eigen::MatrixXd proj = psd_project(a);
        worst_gap = std::max(worst_gap, (proj - testsupport::jacobi_psd_clamp(a)).norm());
        worst_idem = std::max(worst_idem, (psd_project(proj) - proj).norm());
    }
    std::ostringstream detail;
    detail << "100 matrices 3x3..10x10, max |proj - analytic clamp|_F = " << format_g17(worst_gap)
           << ", max idempotence drift " << format_g17(worst_idem) << " (limit 1e-10)";
    report(3, "projection correctness", worst_gap <= 1e-10 && worst_idem <= 1e-10, detail.str());
}

// --------------------------------------------------------- criterion 4

void criterion_graph_oracles() {
    using testsupport::TinyGraph;
    bool ok = true;
    std::ostringstream why;

    // exhaustive: every digraph on up to 4 vertices that is a DAG
    int exhaustive_checked = 0;
    for (int nv : {3, 4}) {
        std::vector<std::pair<int, int>> slots;
        for (int u = 0; u < nv; ++u) {
            for (int v = 0; v < nv; ++v) {
                if (u != v) slots.emplace_back(u, v);
            }
        }
        for (std::uint64_t mask = 0; mask < (1ULL << slots.size()); ++mask) {
            TinyGraph g{nv, {}};
            for (std::size_t t = 0; t < slots.size(); ++t) {
                if (mask & (1ULL << t)) g.edges.push_back(slots[t]);
            }
            if (g.edges.empty() || !testsupport::oracle_is_acyclic(g)) continue;
            ++exhaustive_checked;
            const PairGraph reduced =
                transitive_reduction(build_graph(testsupport::to_comparisons(g)));
            const TinyGraph ours = testsupport::from_pair_graph(reduced, nv);
            if (testsupport::reach_matrix(ours) != testsupport::reach_matrix(g)) {
                ok = false;
                why << " closure mismatch on exhaustive case;";
            }
            // criticality certifies minimality (the reduction of a DAG is
            // unique); the full subset search would be quadratic overkill
            // at this count, so reserve it for the small-edge cases below
            for (std::size_t drop = 0; drop < ours.edges.size(); ++drop) {
                TinyGraph weaker = ours;
                weaker.edges.erase(weaker.edges.begin() + static_cast<long>(drop));
                if (testsupport::reach_matrix(weaker) == testsupport::reach_matrix(g)) {
                    ok = false;
                    why << " non-critical edge kept on exhaustive case;";
                }
            }
            if (g.edges.size() <= 8) {
                const auto minimum = testsupport::oracle_minimum_equivalent(g);
                if (minimum.size() != ours.edges.size()) {
                    ok = false;
                    why << " non-minimal reduction on exhaustive case;";
                }
            }
        }
    }

    // random DAGs up to 8 vertices
    Rng rng(4242);
    int random_checked = 0;
    int subset_validated = 0;
    for (int trial = 0; trial < 520; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(6));  // 3..8
        const TinyGraph dag = testsupport::random_dag(n, 12, rng);
        if (dag.edges.empty()) continue;
        ++random_checked;
        const PairGraph g = build_graph(testsupport::to_comparisons(dag));
        const PairGraph reduced = transitive_reduction(g);
        const TinyGraph ours = testsupport::from_pair_graph(reduced, n);
        if (testsupport::reach_matrix(ours) != testsupport::reach_matrix(dag)) {
            ok = false;
            why << " closure mismatch on random DAG " << trial << ";";
        }
        // minimality: every kept edge is critical (unique reduction for DAGs)
        for (std::size_t drop = 0; drop < ours.edges.size(); ++drop) {
            TinyGraph weaker = ours;
            weaker.edges.erase(weaker.edges.begin() + static_cast<long>(drop));
            if (testsupport::reach_matrix(weaker) == testsupport::reach_matrix(dag)) {
                ok = false;
                why << " non-critical edge kept on random DAG " << trial << ";";
            }
        }
        if (dag.edges.size() <= 10 && subset_validated < 120) {
            ++subset_validated;
            const auto minimum = testsupport::oracle_minimum_equivalent(dag);
            if (minimum.size() != ours.edges.size()) {
                ok = false;
                why << " exhaustive-minimum mismatch on random DAG " << trial << ";";
            }
        }
    }

    // greedy acyclic subsets on possibly cyclic graphs with <= 10 edges
    int mas_checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(4));  // 3..6
        const TinyGraph g = testsupport::random_digraph(n, 10, rng);
        if (g.edges.empty()) continue;
        ++mas_checked;
        const PairGraph pg = build_graph(testsupport::to_comparisons(g));
        const PairGraph kept = max_acyclic_subgraph(pg, 9000 + trial);
        if (!is_acyclic(kept)) {
            ok = false;
            why << " cyclic greedy output on trial " << trial << ";";
        }
        std::set<std::pair<int, int>> kept_edges;
        for (auto [u, v] : kept.edges()) {
            kept_edges.emplace(kept.vertex(u).a / 2, kept.vertex(v).a / 2);
        }
        for (auto [u, v] : g.edges) {
            if (kept_edges.count({u, v})) continue;
            PairGraph plus;
            for (const Pair& p : kept.vertices()) plus.add_vertex(p);
            for (auto [a, b] : kept.edges()) plus.add_edge(a, b);
            plus.add_edge(*plus.find_vertex(Pair(2 * u, 2 * u + 1)),
                          *plus.find_vertex(Pair(2 * v, 2 * v + 1)));
            if (is_acyclic(plus)) {
                ok = false;
                why << " non-maximal greedy output on trial " << trial << ";";
            }
        }
        const int optimum = testsupport::oracle_max_acyclic_edges(g);
        if (2 * kept.edge_count() < optimum) {
            ok = false;
            why << " below half-optimal on trial " << trial << ";";
        }
    }

    std::ostringstream detail;
    detail << exhaustive_checked << " exhaustive DAGs (n<=4), " << random_checked
           << " random DAGs (n<=8, " << subset_validated << " with full subset search), "
           << mas_checked << " greedy runs vs exhaustive optimum" << why.str();
    report(4, "graph-algorithm oracles",
           ok && random_checked >= 500 && mas_checked >= 100, detail.str());
}

// --------------------------------------------------------- criterion 5

void criterion_solver_sanity() {
    const int n = 10;
    std::vector<Comparison> chain;
    for (int t = 1; t + 1 < n; ++t) chain.push_back(Comparison{0, t, 0, t + 1});

    bool monotone_ok = true;
    bool feasible_ok = true;
    double best_gauc = 0.0;
    const std::vector<KernelMatrix> eye{Eigen::MatrixXd::Identity(n, n)};
    for (double beta : {1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3}) {
        Hyperparams hp;
        hp.beta = beta;
        hp.max_iter = 600;
        const TrainResult result = train_gnmds(n, chain, hp);

        double best_seen = result.trace.rows.front().objective;
        for (const TraceRow& r : result.trace.rows) best_seen = std::min(best_seen, r.objective);
        monotone_ok = monotone_ok && best_seen <= result.trace.rows.front().objective;

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(result.metrics.full[0]);
        const double max_abs = std::max(1e-300, eig.eigenvalues().cwiseAbs().maxCoeff());
        feasible_ok = feasible_ok && eig.eigenvalues().minCoeff() >= -1e-8 * max_abs;

        const double score = gauc(
            [&](int a, int b) { return pair_distance(result.metrics, eye, a, b); }, chain);
        best_gauc = std::max(best_gauc, score);
    }
    std::ostringstream detail;
    detail << "best chain GAUC " << format_g17(best_gauc)
           << " (need >= 0.95), best objective <= initial on every run: "
           << (monotone_ok ? "yes" : "NO") << ", PSD metrics: " << (feasible_ok ? "yes" : "NO");
    report(5, "solver sanity", best_gauc >= 0.95 && monotone_ok && feasible_ok, detail.str());
}

// --------------------------------------------------- criteria 6 and 7

struct ProtocolScore {
    double gauc = 0.0;
    int train_comparisons = 0;
    long long iterations = 0;
    MetricSet metrics;
};

// train on given training comparisons (already restricted to train items,
// local ids), score on clean filtered test comparisons (global ids)
ProtocolScore run_protocol(const std::vector<KernelMatrix>& kernels,
                           const std::vector<Comparison>& train_comps_local,
                           const std::vector<int>& train_items,
                           const std::vector<Comparison>& test_comps_global,
                           const Hyperparams& hp) {
    const int n = static_cast<int>(kernels.front().rows());
    const Eigen::Index ntr = static_cast<Eigen::Index>(train_items.size());

    std::vector<KernelMatrix> train_kernels;
    for (const KernelMatrix& k : kernels) {
        KernelMatrix sub(ntr, ntr);
        for (Eigen::Index a = 0; a < ntr; ++a) {
            for (Eigen::Index b = 0; b < ntr; ++b) {
                sub(a, b) = k(train_items[static_cast<std::size_t>(a)],
                              train_items[static_cast<std::size_t>(b)]);
            }
        }
        train_kernels.push_back(std::move(sub));
    }

    ProtocolScore score;
    const TrainResult trained = train(train_kernels, train_comps_local, hp);
    score.metrics = trained.metrics;
    score.train_comparisons = static_cast<int>(train_comps_local.size());
    score.iterations = static_cast<long long>(trained.trace.rows.size());

    const EmbeddingModel model = factorize(trained.metrics);
    const Eigen::MatrixXd train_coords = embed_train(model, train_kernels);
    Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, train_coords.cols());
    for (Eigen::Index t = 0; t < ntr; ++t) {
        coords.row(train_items[static_cast<std::size_t>(t)]) = train_coords.row(t);
    }
    std::vector<Eigen::VectorXd> kcols(kernels.size());
    for (int item = 0; item < n; ++item) {
        if (std::find(train_items.begin(), train_items.end(), item) != train_items.end()) continue;
        for (std::size_t p = 0; p < kernels.size(); ++p) {
            Eigen::VectorXd col(ntr);
            for (Eigen::Index t = 0; t < ntr; ++t) {
                col(t) = kernels[p](train_items[static_cast<std::size_t>(t)], item);
            }
            kcols[p] = std::move(col);
        }
        coords.row(item) = embed_oos(model, kcols).transpose();
    }
    score.gauc = gauc(coordinate_distances(coords), test_comps_global);
    return score;
}

std::vector<Comparison> restrict_to_items(const std::vector<Comparison>& comps,
                                          const std::vector<int>& items, int n) {
    std::vector<int> local(static_cast<std::size_t>(n), -1);
    for (std::size_t t = 0; t < items.size(); ++t) {
        local[static_cast<std::size_t>(items[t])] = static_cast<int>(t);
    }
    std::vector<Comparison> out;
    for (const Comparison& c : comps) {
        const int i = local[static_cast<std::size_t>(c.i)];
        const int j = local[static_cast<std::size_t>(c.j)];
        const int k = local[static_cast<std::size_t>(c.k)];
        const int l = local[static_cast<std::size_t>(c.l)];
        if (i >= 0 && j >= 0 && k >= 0 && l >= 0) out.push_back(Comparison{i, j, k, l});
    }
    return out;
}

// sweep beta on a validation split carved from the training items, then
// retrain on the full training set with the winner
ProtocolScore sweep_and_score(const std::vector<KernelMatrix>& kernels,
                              const std::vector<Comparison>& comps,
                              const std::vector<int>& train_items,
                              const std::vector<Comparison>& test_comps, Hyperparams hp,
                              const std::vector<double>& grid, Rng& rng) {
    // deterministic inner split of the training items
    std::vector<int> shuffled = train_items;
    rng.shuffle(shuffled);
    const std::size_t val_count = shuffled.size() / 5;
    std::vector<int> val(shuffled.begin(), shuffled.begin() + static_cast<long>(val_count));
    std::vector<int> core(shuffled.begin() + static_cast<long>(val_count), shuffled.end());
    std::sort(val.begin(), val.end());
    std::sort(core.begin(), core.end());

    const int n = static_cast<int>(kernels.front().rows());
    const std::vector<Comparison> core_comps = restrict_to_items(comps, core, n);
    const std::vector<Comparison> val_comps = filter_test_comparisons(comps, core, val);

    double best_beta = grid.front();
    double best_score = -1.0;
    for (double beta : grid) {
        Hyperparams hp_beta = hp;
        hp_beta.beta = beta;
        const double score =
            run_protocol(kernels, core_comps, core, val_comps, hp_beta).gauc;
        if (score > best_score) {
            best_score = score;
            best_beta = beta;
        }
    }
    hp.beta = best_beta;
    const std::vector<Comparison> train_comps = restrict_to_items(comps, train_items, n);
    return run_protocol(kernels, train_comps, train_items, test_comps, hp);
}

void criterion_taxonomy_replication() {
    const auto start = Clock::now();

    const Taxonomy tax = Taxonomy::balanced(10, 3);
    std::vector<int> labels;
    for (int leaf : tax.leaves()) {
        for (int t = 0; t < 20; ++t) labels.push_back(leaf);
    }
    const int n = static_cast<int>(labels.size());

    const std::vector<Comparison> comps = generate_comparisons(tax, labels, 61, 4000);
    std::vector<KernelMatrix> kernels;
    kernels.push_back(generate_informative_kernel(labels, tax, 0.35, 100));
    kernels.push_back(generate_informative_kernel(labels, tax, 0.55, 200));
    const std::size_t informative = kernels.size();
    for (int p = 0; p < 3; ++p) {
        kernels.push_back(generate_noise_kernel(n, 300 + static_cast<std::uint64_t>(p)));
    }

    const SplitSpec split = make_split(n, 0.2, 777);
    const std::vector<Comparison> test_comps =
        filter_test_comparisons(comps, split.train, split.test);

    Hyperparams hp;
    hp.mode = MetricMode::Diagonal;
    hp.max_iter = 400;
    hp.tol = 1e-7;
    const std::vector<double> grid{1e0, 1e1, 1e2, 1e3, 1e4};

    Rng rng(424242);
    double best_single = 0.0;
    std::ostringstream table;
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        const double score =
            sweep_and_score({kernels[p]}, comps, split.train, test_comps, hp, grid, rng).gauc;
        table << " single" << p << "=" << format_g17(score);
        best_single = std::max(best_single, score);
    }
    const double sum_score =
        sweep_and_score({sum_kernel(kernels)}, comps, split.train, test_comps, hp, grid, rng).gauc;
    const ProtocolScore mk =
        sweep_and_score(kernels, comps, split.train, test_comps, hp, grid, rng);

    double noise_mass = 0.0, total_mass = 0.0;
    for (std::size_t p = 0; p < mk.metrics.diag.size(); ++p) {
        const double mass = mk.metrics.diag[p].sum();
        total_mass += mass;
        if (p >= informative) noise_mass += mass;
    }
    const double noise_fraction = total_mass > 0.0 ? noise_mass / total_mass : 1.0;
    const double elapsed = seconds_since(start);

    const bool beats_sum = mk.gauc >= sum_score;
    const bool beats_single = mk.gauc >= best_single - 0.01;
    const bool noise_rejected = noise_fraction < 0.05;
    std::ostringstream detail;
    detail << "multi=" << format_g17(mk.gauc) << " sum=" << format_g17(sum_score)
           << " best_single=" << format_g17(best_single) << table.str()
           << " noise_mass=" << format_g17(noise_fraction) << " time=" << format_g17(elapsed)
           << "s";
    report(6, "taxonomy replication",
           beats_sum && beats_single && noise_rejected && elapsed < 300.0, detail.str());
}

// raw taxonomy comparisons: same least-common-ancestor rule as the
// generator but with redundant, transitive measurements left in, the way
// survey data arrives
std::vector<Comparison> raw_taxonomy_comparisons(const Taxonomy& tax,
                                                 const std::vector<int>& labels, int budget,
                                                 Rng& rng) {
    std::set<Comparison> seen;
    std::vector<Comparison> out;
    const std::size_t n = labels.size();
    long long attempts = 200LL * budget;
    while (static_cast<int>(out.size()) < budget && attempts-- > 0) {
        const int a = rng.index(n);
        const int b = rng.index(n);
        const int c = rng.index(n);
        if (a == b || a == c || b == c) continue;
        const int lab = tax.lca(labels[static_cast<std::size_t>(a)],
                                labels[static_cast<std::size_t>(b)]);
        const int lac = tax.lca(labels[static_cast<std::size_t>(a)],
                                labels[static_cast<std::size_t>(c)]);
        if (lab == lac || tax.lca(lab, lac) != lac) continue;
        const Comparison t = canonicalize(Comparison{a, b, a, c});
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

void criterion_graph_processing_payoff() {
    // survey-like density: few items, many overlapping measurements, so
    // reversals genuinely conflict and redundancy is plentiful
    const Taxonomy tax = Taxonomy::balanced(10, 3);
    std::vector<int> labels;
    for (int leaf : tax.leaves()) {
        for (int t = 0; t < 8; ++t) labels.push_back(leaf);
    }
    const int n = static_cast<int>(labels.size());

    Rng rng(7171);
    const std::vector<Comparison> comps = raw_taxonomy_comparisons(tax, labels, 16000, rng);
    const KernelMatrix kernel = generate_informative_kernel(labels, tax, 0.4, 400);

    const SplitSpec split = make_split(n, 0.2, 888);
    const std::vector<Comparison> test_comps =
        filter_test_comparisons(comps, split.train, split.test);

    // training measurements with 15% planted reversals
    const std::vector<Comparison> train_clean = restrict_to_items(comps, split.train, n);
    const std::vector<Comparison> train_noisy = plant_reversals(train_clean, 0.15, 999);
    const std::vector<Comparison> train_processed = process_constraints(train_noisy, 31337);

    Hyperparams hp;
    hp.mode = MetricMode::Diagonal;
    hp.max_iter = 400;
    hp.tol = 1e-7;
    hp.beta = 1e3;

    const ProtocolScore full =
        run_protocol({kernel}, train_noisy, split.train, test_comps, hp);
    const ProtocolScore processed =
        run_protocol({kernel}, train_processed, split.train, test_comps, hp);

    const bool accuracy_ok = processed.gauc >= full.gauc - 0.02;
    const bool fewer = processed.train_comparisons < full.train_comparisons;
    // the violated-constraint scan touches every comparison once per
    // iteration, so per-iteration cost is proportional to |C|
    const long long full_scans = full.iterations * full.train_comparisons;
    const long long proc_scans = processed.iterations * processed.train_comparisons;

    std::ostringstream detail;
    detail << "full: gauc=" << format_g17(full.gauc) << " |C|=" << full.train_comparisons
           << " scans=" << full_scans << "; processed: gauc=" << format_g17(processed.gauc)
           << " |C|=" << processed.train_comparisons << " scans=" << proc_scans;
    report(7, "graph processing payoff", accuracy_ok && fewer, detail.str());
}

// --------------------------------------------------------- criterion 8

void criterion_embedding_consistency() {
    Rng rng(3030);
    bool ok = true;
    std::ostringstream why;
    double worst_rel = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(6));
        std::vector<KernelMatrix> ks{random_psd_kernel(n, rng), random_psd_kernel(n, rng)};
        MetricSet w;
        w.mode = MetricMode::Full;
        for (int p = 0; p < 2; ++p) {
            Eigen::MatrixXd f(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) f(i, j) = rng.gaussian();
            }
            w.full.push_back(f * f.transpose() / n);
        }
        const EmbeddingModel model = factorize(w);
        const Eigen::MatrixXd coords = embed_train(model, ks);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double direct = pair_distance(w, ks, i, j);
                const double embedded = (coords.row(i) - coords.row(j)).squaredNorm();
                const double rel = std::abs(embedded - direct) / std::max(1.0, std::abs(direct));
                worst_rel = std::max(worst_rel, rel);
            }
            const Eigen::VectorXd oos =
                embed_oos(model, {Eigen::VectorXd(ks[0].col(i)), Eigen::VectorXd(ks[1].col(i))});
            if ((oos.transpose() - coords.row(i)).norm() != 0.0) {
                ok = false;
                why << " out-of-sample row " << i << " differs;";
            }
        }
    }
    if (worst_rel > 1e-8) {
        ok = false;
        why << " distance mismatch " << format_g17(worst_rel) << ";";
    }

    // monotone-transform invariance of the score itself
    Eigen::MatrixXd pts(8, 3);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 3; ++j) pts(i, j) = rng.gaussian();
    }
    const DistanceFn base = coordinate_distances(pts);
    const std::vector<Comparison> comps = random_comparisons(8, 40, rng);
    const DistanceFn squared = [&](int a, int b) { return base(a, b) * base(a, b); };
    const DistanceFn affine = [&](int a, int b) { return 2.0 * base(a, b) + 1.0; };
    if (gauc(base, comps) != gauc(squared, comps) || gauc(base, comps) != gauc(affine, comps)) {
        ok = false;
        why << " gauc not invariant under monotone transforms;";
    }

    std::ostringstream detail;
    detail << "worst relative distance error " << format_g17(worst_rel)
           << " (limit 1e-8), out-of-sample rows exact, monotone invariance"
           << (why.str().empty() ? "" : why.str());
    report(8, "embedding consistency", ok, detail.str());
}

// --------------------------------------------------------- criterion 9

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool run_cmd(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

void criterion_cli_determinism() {
    const fs::path base = fs::path(MKPOE_TEST_TMPDIR) / "acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    {
        std::ofstream tree(base / "tree.txt");
        tree << "root\n  a\n    a1\n    a2\n  b\n    b1\n";
    }

    // each run works through identical relative paths from its own
    // directory, so every byte of every artifact must match
    auto pipeline = [&](const std::string& run) -> bool {
        const fs::path dir = base / run;
        fs::create_directories(dir);
        const std::string in = "cd " + dir.string() + " && " + MKPOE_CLI_PATH + " ";
        return run_cmd(in + "synth --taxonomy ../tree.txt --per-class 6 --kernels 0.3"
                            " --noise-kernels 1 --budget 300 --seed 11 --out data"
                            " > synth_report.txt") &&
               run_cmd(in + "graph data/comparisons.txt --prune-contradictions"
                            " --max-acyclic 5 --reduce --stats -o clean.txt"
                            " > graph_report.txt") &&
               run_cmd(in + "train clean.txt --kernel data/kernel_info_0.txt"
                            " --kernel data/kernel_noise_0.txt --beta 100 --mode diag"
                            " --max-iter 120 --seed 3 -o model.txt --trace trace.txt"
                            " > train_report.txt") &&
               run_cmd(in + "embed model.txt --kernel data/kernel_info_0.txt"
                            " --kernel data/kernel_noise_0.txt -o coords.txt") &&
               run_cmd(in + "eval data/comparisons.txt --coords coords.txt"
                            " > eval_report.txt");
    };

    const bool ran = pipeline("run_a") && pipeline("run_b");
    bool identical = ran;
    std::ostringstream mismatches;
    if (ran) {
        const std::vector<std::string> files{
            "synth_report.txt", "graph_report.txt", "train_report.txt",
            "clean.txt",        "model.txt",        "trace.txt",
            "coords.txt",       "eval_report.txt",  "data/comparisons.txt",
            "data/kernel_info_0.txt", "data/meta.txt"};
        for (const std::string& f : files) {
            if (slurp(base / "run_a" / f) != slurp(base / "run_b" / f)) {
                identical = false;
                mismatches << " " << f;
            }
        }
    }
    std::ostringstream detail;
    if (!ran) {
        detail << "pipeline run failed";
    } else if (identical) {
        detail << "synth -> graph -> train -> embed -> eval byte-identical across two runs";
    } else {
        detail << "mismatched files:" << mismatches.str();
    }
    report(9, "end-to-end determinism", ran && identical, detail.str());
}

}  // namespace

int main() {
    criterion_oracle_completeness();
    criterion_gradient_correctness();
    criterion_projection_correctness();
    criterion_graph_oracles();
    criterion_solver_sanity();
    criterion_taxonomy_replication();
    criterion_graph_processing_payoff();
    criterion_embedding_consistency();
    criterion_cli_determinism();

    std::cout << (g_failures == 0 ? "all criteria passed" : "criteria failed: ") << std::flush;
    if (g_failures) std::cout << g_failures;
    std::cout << std::endl;
    return g_failures == 0 ? 0 : 1;
}
