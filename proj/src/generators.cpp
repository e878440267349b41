#include "mw/generators.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace mw {

int Generator::order() const {
    return std::accumulate(exponents.begin(), exponents.end(), 0);
}

void Partition::validate() const {
    if (modes < 1) throw std::invalid_argument("partition: modes must be >= 1");
    std::vector<int> seen(modes, 0);
    for (const auto& b : blocks) {
        if (b.empty()) throw std::invalid_argument("partition: empty block");
        for (int mode : b) {
            if (mode < 0 || mode >= modes) throw std::invalid_argument("partition: mode out of range");
            if (seen[mode]++) throw std::invalid_argument("partition: mode appears twice");
        }
    }
    for (int mode = 0; mode < modes; ++mode)
        if (!seen[mode]) throw std::invalid_argument("partition: mode not covered");
}

int Partition::block_of(int mode) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (int m : blocks[i])
            if (m == mode) return static_cast<int>(i);
    throw std::invalid_argument("partition: mode not covered");
}

std::vector<int> Partition::size_profile() const {
    std::vector<int> s;
    s.reserve(blocks.size());
    for (const auto& b : blocks) s.push_back(static_cast<int>(b.size()));
    std::sort(s.rbegin(), s.rend());
    return s;
}

std::string Partition::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) out += '|';
        for (int m : blocks[i]) out += std::to_string(m + 1);
    }
    return out;
}

Partition parse_partition(const std::string& spec, int modes) {
    // Grammar: digits are 1-based mode labels, '|' separates blocks, e.g. "12|3".
    Partition p;
    p.modes = modes;
    std::vector<int> cur;
    auto flush = [&] {
        if (!cur.empty()) {
            p.blocks.push_back(cur);
            cur.clear();
        }
    };
    for (char c : spec) {
        if (c == '|') {
            flush();
        } else if (c >= '1' && c <= '9') {
            cur.push_back(c - '1');
        } else if (c == ' ') {
            continue;
        } else {
            throw std::invalid_argument("partition spec: unexpected character");
        }
    }
    flush();
    p.validate();
    return p;
}

Partition singleton_partition(int modes) {
    Partition p;
    p.modes = modes;
    for (int i = 0; i < modes; ++i) p.blocks.push_back({i});
    return p;
}

LocalityTag locality_of(const Generator& g, const Partition& p) {
    p.validate();
    if (g.modes() != p.modes) throw std::invalid_argument("locality_of: mode count mismatch");
    int block = -1;
    for (int mode = 0; mode < g.modes(); ++mode) {
        if (g.q_exp(mode) == 0 && g.p_exp(mode) == 0) continue;
        int b = p.block_of(mode);
        if (block == -1) block = b;
        else if (block != b) return {false, -1};
    }
    // order >= 1 guarantees at least one touched mode
    return {true, block};
}

namespace {

void enumerate_exponents(int slots, int total, std::vector<int>& cur, std::vector<Generator>& out) {
    if (slots == 1) {
        cur.push_back(total);
        out.push_back(Generator{cur});
        cur.pop_back();
        return;
    }
    for (int k = total; k >= 0; --k) {  // descending first slot => lexicographic descending? we sort later
        cur.push_back(k);
        enumerate_exponents(slots - 1, total - k, cur, out);
        cur.pop_back();
    }
}

}  // namespace

GeneratorSet build_generator_set(int max_order, int modes) {
    if (max_order < 1) throw std::invalid_argument("generator set: max order must be >= 1");
    if (max_order > kMaxGeneratorOrder)
        throw std::invalid_argument("generator set: order beyond configured maximum");
    if (modes < 1) throw std::invalid_argument("generator set: modes must be >= 1");
    GeneratorSet set;
    set.modes = modes;
    set.max_order = max_order;
    for (int order = 1; order <= max_order; ++order) {
        std::vector<Generator> level;
        std::vector<int> cur;
        enumerate_exponents(2 * modes, order, cur, level);
        std::sort(level.begin(), level.end(),
                  [](const Generator& a, const Generator& b) { return a.exponents < b.exponents; });
        set.gens.insert(set.gens.end(), level.begin(), level.end());
    }
    return set;
}

std::vector<int> GeneratorSet::local_indices(const Partition& p) const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < gens.size(); ++i)
        if (locality_of(gens[i], p).local) idx.push_back(static_cast<int>(i));
    return idx;
}

namespace {
long long binomial(long long n, long long k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
}  // namespace

long long full_count(int max_order, int modes) {
    long long total = 0;
    for (int k = 1; k <= max_order; ++k) total += binomial(2LL * modes + k - 1, k);
    return total;
}

long long local_count(int max_order, int modes) {
    return static_cast<long long>(modes) * max_order * (max_order + 3) / 2;
}

std::string generator_text(const Generator& g) {
    std::string out;
    auto emit = [&](char sym, int mode, int exp) {
        if (exp == 0) return;
        if (!out.empty()) out += ' ';
        out += sym;
        out += std::to_string(mode + 1);
        if (exp > 1) {
            out += '^';
            out += std::to_string(exp);
        }
    };
    for (int mode = 0; mode < g.modes(); ++mode) emit('q', mode, g.q_exp(mode));
    for (int mode = 0; mode < g.modes(); ++mode) emit('p', mode, g.p_exp(mode));
    return out;
}

std::optional<Generator> parse_generator(const std::string& text, int modes) {
    Generator g;
    g.exponents.assign(2 * modes, 0);
    std::istringstream in(text);
    std::string tok;
    bool any = false;
    while (in >> tok) {
        if (tok.size() < 2 || (tok[0] != 'q' && tok[0] != 'p')) return std::nullopt;
        std::size_t caret = tok.find('^');
        int exp = 1;
        std::string mode_str;
        if (caret == std::string::npos) {
            mode_str = tok.substr(1);
        } else {
            mode_str = tok.substr(1, caret - 1);
            try {
                exp = std::stoi(tok.substr(caret + 1));
            } catch (...) {
                return std::nullopt;
            }
        }
        int mode;
        try {
            mode = std::stoi(mode_str) - 1;
        } catch (...) {
            return std::nullopt;
        }
        if (mode < 0 || mode >= modes || exp < 1) return std::nullopt;
        g.exponents[(tok[0] == 'q' ? 0 : modes) + mode] += exp;
        any = true;
    }
    if (!any) return std::nullopt;
    return g;
}

}  // namespace mw
