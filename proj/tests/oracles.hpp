#pragma once

// Independent reference computations. None of these use the engine.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Non-attacking placements of n queens, by enumerating permutations.
inline std::size_t queens(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 1);
    std::size_t count = 0;
    do {
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j)
                ok = std::abs(p[i] - p[j]) != j - i;
        count += ok;
    } while (std::next_permutation(p.begin(), p.end()));
    return count;
}

// sum(coef[i] * x[var[i]]) + constant  REL  rhs-free form against 0,
// written with the operator as it appears in the source constraint.
struct Lin {
    std::vector<std::pair<int, int>> terms; // (coef, var index)
    int constant = 0;
    std::string op; // "#=", "#\\=", "#<", "#>", "#=<", "#>="

    bool holds(const std::vector<int> &x) const {
        long s = constant;
        for (auto [c, v] : terms)
            s += long(c) * x[v];
        if (op == "#=")
            return s == 0;
        if (op == "#\\=")
            return s != 0;
        if (op == "#<")
            return s < 0;
        if (op == "#>")
            return s > 0;
        if (op == "#=<")
            return s <= 0;
        return s >= 0;
    }
};

// Every assignment within the boxes satisfying all constraints.
inline std::vector<std::vector<int>> solutions(const std::vector<std::pair<int, int>> &boxes,
                                               const std::vector<Lin> &cons) {
    std::vector<std::vector<int>> out;
    std::vector<int> x(boxes.size());
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == boxes.size()) {
            for (const auto &c : cons)
                if (!c.holds(x))
                    return;
            out.push_back(x);
            return;
        }
        for (int v = boxes[i].first; v <= boxes[i].second; ++v) {
            x[i] = v;
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

// [a1,b1] meet [a2,b2], or nothing.
inline std::optional<std::pair<int, int>> intersect(std::pair<int, int> a, std::pair<int, int> b) {
    int lo = std::max(a.first, b.first), hi = std::min(a.second, b.second);
    if (lo > hi)
        return std::nullopt;
    return std::make_pair(lo, hi);
}

} // namespace oracle
