#pragma once

#include <compare>
#include <iosfwd>
#include <string>
#include <vector>

#include <mkpoe/errors.hpp>

namespace mkpoe {

/// Unordered item pair, stored canonically with a < b.  Distance is
/// symmetric, so (i,j) and (j,i) denote the same pair.
struct Pair {
    int a = 0;
    int b = 0;

    Pair() = default;
    Pair(int x, int y) : a(x < y ? x : y), b(x < y ? y : x) {}

    friend bool operator==(const Pair&, const Pair&) = default;
    friend std::strong_ordering operator<=>(const Pair&, const Pair&) = default;
};

/// One relative similarity measurement (i,j,k,l): pair (i,j) is more
/// similar -- closer -- than pair (k,l).
struct Comparison {
    int i = 0;
    int j = 0;
    int k = 0;
    int l = 0;

    Pair closer() const { return Pair(i, j); }
    Pair farther() const { return Pair(k, l); }

    friend bool operator==(const Comparison&, const Comparison&) = default;
    friend std::strong_ordering operator<=>(const Comparison&, const Comparison&) = default;
};

/// Canonical form: both pairs sorted ascending.  Idempotent.
Comparison canonicalize(const Comparison& c);

/// Throws ValidationError if i==j, k==l, any index is negative, or both
/// pairs coincide.  `where` names the source (e.g. an input position) in
/// the error message.
void validate_comparison(const Comparison& c, const std::string& where = "");

/// Largest item index mentioned, plus one; 0 for an empty set.
int item_count(const std::vector<Comparison>& comparisons);

/// Reverse of a comparison: asserts the opposite ordering of the same pairs.
inline Comparison reversed(const Comparison& c) { return Comparison{c.k, c.l, c.i, c.j}; }

/// Removes every comparison whose reverse (after canonicalization) is also
/// present; both members of each contradictory pair go.  Survivors keep
/// their input order.
std::vector<Comparison> prune_direct_contradictions(const std::vector<Comparison>& comparisons);

/// Canonicalize and drop duplicates, keeping first occurrences in order.
/// Validates every tuple.
std::vector<Comparison> canonical_dedup(const std::vector<Comparison>& comparisons);

// Text format: one comparison per line, four whitespace-separated
// non-negative integers "i j k l"; lines starting with '#' are ignored.
std::vector<Comparison> read_comparisons(std::istream& in);
std::vector<Comparison> read_comparisons_file(const std::string& path);
void write_comparisons(std::ostream& out, const std::vector<Comparison>& comparisons);
void write_comparisons_file(const std::string& path, const std::vector<Comparison>& comparisons);

}  // namespace mkpoe
