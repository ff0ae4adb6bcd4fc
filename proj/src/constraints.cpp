#include <mkpoe/constraints.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace mkpoe {

Comparison canonicalize(const Comparison& c) {
    const Pair p = c.closer();
    const Pair q = c.farther();
    return Comparison{p.a, p.b, q.a, q.b};
}

void validate_comparison(const Comparison& c, const std::string& where) {
    const std::string at = where.empty() ? "" : " at " + where;
    auto fmt = [&](const char* why) {
        std::ostringstream os;
        os << "invalid comparison (" << c.i << "," << c.j << "," << c.k << "," << c.l << ")" << at
           << ": " << why;
        return os.str();
    };
    if (c.i < 0 || c.j < 0 || c.k < 0 || c.l < 0) throw ValidationError(fmt("negative item index"));
    if (c.i == c.j) throw ValidationError(fmt("first pair repeats one item"));
    if (c.k == c.l) throw ValidationError(fmt("second pair repeats one item"));
    if (c.closer() == c.farther()) throw ValidationError(fmt("both pairs are the same pair"));
}

int item_count(const std::vector<Comparison>& comparisons) {
    int n = 0;
    for (const Comparison& c : comparisons) {
        n = std::max({n, c.i + 1, c.j + 1, c.k + 1, c.l + 1});
    }
    return n;
}

std::vector<Comparison> prune_direct_contradictions(const std::vector<Comparison>& comparisons) {
    std::set<std::pair<Pair, Pair>> present;
    for (const Comparison& c : comparisons) {
        present.emplace(c.closer(), c.farther());
    }
    std::vector<Comparison> kept;
    kept.reserve(comparisons.size());
    for (const Comparison& c : comparisons) {
        if (!present.count({c.farther(), c.closer()})) {
            kept.push_back(c);
        }
    }
    return kept;
}

std::vector<Comparison> canonical_dedup(const std::vector<Comparison>& comparisons) {
    std::set<Comparison> seen;
    std::vector<Comparison> out;
    out.reserve(comparisons.size());
    for (std::size_t idx = 0; idx < comparisons.size(); ++idx) {
        validate_comparison(comparisons[idx], "index " + std::to_string(idx));
        const Comparison c = canonicalize(comparisons[idx]);
        if (seen.insert(c).second) {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<Comparison> read_comparisons(std::istream& in) {
    std::vector<Comparison> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        Comparison c;
        if (!(ls >> c.i >> c.j >> c.k >> c.l)) {
            throw ParseError("expected four integers \"i j k l\"", lineno);
        }
        std::string trailing;
        if (ls >> trailing) {
            throw ParseError("unexpected trailing token '" + trailing + "'", lineno);
        }
        try {
            validate_comparison(c);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
        out.push_back(c);
    }
    return out;
}

std::vector<Comparison> read_comparisons_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open comparisons file: " + path);
    return read_comparisons(in);
}

void write_comparisons(std::ostream& out, const std::vector<Comparison>& comparisons) {
    for (const Comparison& c : comparisons) {
        out << c.i << ' ' << c.j << ' ' << c.k << ' ' << c.l << '\n';
    }
}

void write_comparisons_file(const std::string& path, const std::vector<Comparison>& comparisons) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path);
    write_comparisons(out, comparisons);
}

}  // namespace mkpoe
