#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mw/common.hpp"

namespace mw {

// A symmetrized quadrature monomial S(q1^k1 ... qm^km p1^k(m+1) ... pm^k(2m)),
// stored as its exponent tuple. Indices 0..m-1 are q exponents, m..2m-1 are p.
struct Generator {
    std::vector<int> exponents;

    int modes() const { return static_cast<int>(exponents.size()) / 2; }
    int order() const;
    int q_exp(int mode) const { return exponents[mode]; }
    int p_exp(int mode) const { return exponents[modes() + mode]; }
    bool operator==(const Generator& o) const { return exponents == o.exponents; }
};

// Disjoint mode blocks covering 0..m-1. Blocks use 0-based mode indices.
struct Partition {
    int modes = 0;
    std::vector<std::vector<int>> blocks;

    void validate() const;
    int block_of(int mode) const;
    // Multiset of block sizes, sorted descending; partitions with equal
    // size profile are equivalent for the mode-intrinsic witness.
    std::vector<int> size_profile() const;
    std::string to_string() const;  // 1-based, e.g. "12|3"
};

Partition parse_partition(const std::string& spec, int modes);
Partition singleton_partition(int modes);

struct LocalityTag {
    bool local = false;
    int block = -1;  // valid when local
};

LocalityTag locality_of(const Generator& g, const Partition& p);

// Ordered set of all generators of order 1..max_order on `modes` modes.
// Canonical ordering: ascending total order, then lexicographic on the
// exponent tuple. The ordering is part of the serialized contract: matrix
// rows/columns are indexed by it.
struct GeneratorSet {
    int modes = 0;
    int max_order = 0;
    std::vector<Generator> gens;

    std::size_t size() const { return gens.size(); }
    const Generator& operator[](std::size_t i) const { return gens[i]; }
    std::vector<int> local_indices(const Partition& p) const;
};

inline constexpr int kMaxGeneratorOrder = 3;  // factorial guard on the lift

GeneratorSet build_generator_set(int max_order, int modes);

// Closed forms. full_count = sum_{k=1..N} C(2m+k-1, k); local_count = m N (N+3)/2.
long long full_count(int max_order, int modes);
long long local_count(int max_order, int modes);

// Text form used in CLI headers, e.g. "q1^2 p2"; "1" never occurs (order >= 1).
std::string generator_text(const Generator& g);
std::optional<Generator> parse_generator(const std::string& text, int modes);

}  // namespace mw
