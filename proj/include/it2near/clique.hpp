#pragma once

// Maximal clique enumeration: depth-first candidate extension with Tomita
// pivoting, outer loop in degeneracy order.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitset.hpp"
#include "errors.hpp"
#include "tolerance.hpp"

namespace it2near {

struct CliqueLimits {
    std::size_t max_cliques = 500'000;
    std::chrono::milliseconds time_budget{10'000};
};

enum class EnumerationStatus { complete, clique_cap, time_budget };

inline std::string to_string(EnumerationStatus s) {
    switch (s) {
        case EnumerationStatus::complete: return "complete";
        case EnumerationStatus::clique_cap: return "clique_cap";
        case EnumerationStatus::time_budget: return "time_budget";
    }
    return "?";
}

using Clique = std::vector<std::uint32_t>;

class BudgetExceeded : public Error {
public:
    BudgetExceeded(EnumerationStatus why, std::vector<Clique> partial)
        : Error("BudgetExceeded: clique enumeration stopped on " + to_string(why) + " after " +
                std::to_string(partial.size()) + " cliques"),
          why_(why),
          partial_(std::move(partial)) {}

    EnumerationStatus reason() const noexcept { return why_; }
    const std::vector<Clique>& partial() const noexcept { return partial_; }

private:
    EnumerationStatus why_;
    std::vector<Clique> partial_;
};

/// Vertices ordered by repeatedly removing a minimum-degree vertex; ties go
/// to the smallest id so the order is deterministic.
inline std::vector<std::uint32_t> degeneracy_order(std::span<const Bitset> adj) {
    const std::size_t n = adj.size();
    std::vector<std::size_t> degree(n);
    std::size_t max_deg = 0;
    for (std::size_t v = 0; v < n; ++v) {
        degree[v] = adj[v].count();
        max_deg = std::max(max_deg, degree[v]);
    }
    // bucket per degree, each kept as a sorted set via bitset scan
    std::vector<Bitset> buckets(max_deg + 1, Bitset(n));
    for (std::size_t v = 0; v < n; ++v) buckets[degree[v]].set(v);
    std::vector<bool> removed(n, false);
    std::vector<std::uint32_t> order;
    order.reserve(n);
    std::size_t lo = 0;
    for (std::size_t step = 0; step < n; ++step) {
        while (buckets[lo].none()) ++lo;
        std::size_t v = 0;
        bool found = false;
        for (std::size_t w = 0; w < buckets[lo].word_count() && !found; ++w)
            if (buckets[lo].words()[w]) {
                v = w * 64 + static_cast<std::size_t>(std::countr_zero(buckets[lo].words()[w]));
                found = true;
            }
        buckets[lo].reset(v);
        removed[v] = true;
        order.push_back(static_cast<std::uint32_t>(v));
        adj[v].for_each([&](std::size_t u) {
            if (removed[u]) return;
            buckets[degree[u]].reset(u);
            --degree[u];
            buckets[degree[u]].set(u);
            if (degree[u] < lo) lo = degree[u];
        });
    }
    return order;
}

namespace detail {

template <typename Visitor>
class CliqueSearch {
public:
    CliqueSearch(std::span<const Bitset> adj, const CliqueLimits& limits, Visitor& visit)
        : adj_(adj), limits_(limits), visit_(visit), start_(std::chrono::steady_clock::now()) {}

    EnumerationStatus run() {
        const std::size_t n = adj_.size();
        if (n == 0) return EnumerationStatus::complete;
        const auto order = degeneracy_order(adj_);
        std::vector<std::size_t> position(n);
        for (std::size_t i = 0; i < n; ++i) position[order[i]] = i;

        for (std::size_t i = 0; i < n && status_ == EnumerationStatus::complete; ++i) {
            const std::uint32_t v = order[i];
            Bitset& p = scratch(0).p;
            Bitset& x = scratch(0).x;
            p = Bitset(n);
            x = Bitset(n);
            adj_[v].for_each([&](std::size_t u) {
                if (position[u] > i)
                    p.set(u);
                else
                    x.set(u);
            });
            r_.assign(1, v);
            expand(0);
        }
        return status_;
    }

private:
    struct Level {
        Bitset p, x;
        std::vector<std::uint32_t> branch;
    };

    Level& scratch(std::size_t depth) {
        if (levels_.size() <= depth) levels_.resize(depth + 1);
        return levels_[depth];
    }

    bool out_of_time() {
        if ((++calls_ & 0xFF) != 0) return false;
        return std::chrono::steady_clock::now() - start_ > limits_.time_budget;
    }

    void report() {
        if (emitted_ >= limits_.max_cliques) {
            status_ = EnumerationStatus::clique_cap;
            return;
        }
        ++emitted_;
        visit_(std::span<const std::uint32_t>(r_));
    }

    void expand(std::size_t depth) {
        if (status_ != EnumerationStatus::complete) return;
        if (out_of_time()) {
            status_ = EnumerationStatus::time_budget;
            return;
        }
        Level& lv = scratch(depth);
        if (lv.p.none()) {
            if (lv.x.none()) report();
            return;
        }
        // pivot: vertex of P u X with the most neighbors in P
        std::size_t pivot = 0, best = 0;
        bool have = false;
        auto consider = [&](std::size_t u) {
            const std::size_t c = adj_[u].and_count(lv.p);
            if (!have || c > best) {
                pivot = u;
                best = c;
                have = true;
            }
        };
        lv.p.for_each(consider);
        lv.x.for_each(consider);

        lv.branch.clear();
        lv.p.for_each([&](std::size_t u) {
            if (!adj_[pivot].test(u)) lv.branch.push_back(static_cast<std::uint32_t>(u));
        });

        for (std::size_t k = 0; k < levels_[depth].branch.size(); ++k) {
            const std::uint32_t v = levels_[depth].branch[k];
            {
                Level& next = scratch(depth + 1);
                Level& cur = levels_[depth];
                next.p = cur.p;
                next.p &= adj_[v];
                next.x = cur.x;
                next.x &= adj_[v];
            }
            r_.push_back(v);
            expand(depth + 1);
            r_.pop_back();
            if (status_ != EnumerationStatus::complete) return;
            Level& cur = levels_[depth];
            cur.p.reset(v);
            cur.x.set(v);
        }
    }

    std::span<const Bitset> adj_;
    const CliqueLimits& limits_;
    Visitor& visit_;
    std::chrono::steady_clock::time_point start_;
    std::vector<Level> levels_;
    std::vector<std::uint32_t> r_;
    std::size_t emitted_ = 0;
    std::uint64_t calls_ = 0;
    EnumerationStatus status_ = EnumerationStatus::complete;
};

}  // namespace detail

/// Streams every maximal clique of the graph to `visit` (members in
/// discovery order). Stops early, without throwing, when a limit trips.
template <typename Visitor>
EnumerationStatus for_each_maximal_clique(std::span<const Bitset> adjacency, const CliqueLimits& limits,
                                          Visitor&& visit) {
    detail::CliqueSearch<std::remove_reference_t<Visitor>> search(adjacency, limits, visit);
    return search.run();
}

/// All maximal cliques, each sorted ascending, the list sorted
/// lexicographically. Throws BudgetExceeded (with the cliques found so far)
/// when a limit trips.
inline std::vector<Clique> enumerate_maximal_cliques(std::span<const Bitset> adjacency,
                                                     const CliqueLimits& limits = {}) {
    std::vector<Clique> out;
    const auto status = for_each_maximal_clique(adjacency, limits, [&](std::span<const std::uint32_t> c) {
        Clique cl(c.begin(), c.end());
        std::sort(cl.begin(), cl.end());
        out.push_back(std::move(cl));
    });
    std::sort(out.begin(), out.end());
    if (status != EnumerationStatus::complete) throw BudgetExceeded(status, std::move(out));
    return out;
}

inline std::vector<Clique> enumerate_maximal_cliques(const ToleranceGraph& g, const CliqueLimits& limits = {}) {
    return enumerate_maximal_cliques(g.adjacency(), limits);
}

}  // namespace it2near
