#pragma once

// Nearness measures between two described images: the crisp tolerance
// nearness measure, its fuzzy generalization, and the interval type-2
// average of the upper and lower fuzzy measures. All are distances in
// [0, 1] with 0 meaning maximally near.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clique.hpp"
#include "errors.hpp"
#include "perceptual.hpp"
#include "tolerance.hpp"

namespace it2near {

enum class Measure { tnm, tfnm, it2bfnm };

inline std::string to_string(Measure m) {
    switch (m) {
        case Measure::tnm: return "tnm";
        case Measure::tfnm: return "tfnm";
        case Measure::it2bfnm: return "it2bfnm";
    }
    return "?";
}

inline Measure parse_measure(const std::string& s) {
    if (s == "tnm") return Measure::tnm;
    if (s == "tfnm") return Measure::tfnm;
    if (s == "it2bfnm") return Measure::it2bfnm;
    throw InvalidParameter("unknown measure '" + s + "'");
}

struct NearnessScore {
    Measure measure = Measure::tnm;
    double value = 0.0;
    std::optional<double> upper;  ///< it2bfnm only
    std::optional<double> lower;  ///< it2bfnm only
    std::size_t classes = 0;
    EnumerationStatus status = EnumerationStatus::complete;

    bool approximate() const noexcept { return status != EnumerationStatus::complete; }
};

inline double fuzzy_cardinality(std::span<const double> grades) {
    return std::accumulate(grades.begin(), grades.end(), 0.0);
}

using DescribedImage = std::span<const ObjectDescription>;

namespace detail {

/// Objects of Z = X u Y with identical description vectors collapsed into
/// one node. Identical descriptions have identical neighborhoods and grade
/// 1 between them, so they always land in the same maximal cliques with the
/// same class grade; counting them per side keeps every measure exact.
struct GroupedUnion {
    std::vector<const std::vector<double>*> reps;
    std::vector<std::uint32_t> count_x;
    std::vector<std::uint32_t> count_y;
    std::vector<std::vector<std::uint32_t>> members;  ///< Z indices; X first, then Y
};

inline GroupedUnion group_union(DescribedImage x, DescribedImage y, Envelope env) {
    if (x.empty() || y.empty()) throw InvalidParameter("nearness requires two non-empty object sets");
    const std::size_t n = x.size() + y.size();
    auto vec = [&](std::size_t z) -> const std::vector<double>& {
        return envelope_vector(z < x.size() ? x[z] : y[z - x.size()], env);
    };
    const std::size_t dim = vec(0).size();
    for (std::size_t z = 1; z < n; ++z)
        if (vec(z).size() != dim) throw DimensionMismatch(dim, vec(z).size());

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return vec(a) < vec(b); });

    GroupedUnion g;
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t z = order[k];
        if (k == 0 || vec(order[k - 1]) != vec(z)) {
            g.reps.push_back(&vec(z));
            g.count_x.push_back(0);
            g.count_y.push_back(0);
            g.members.emplace_back();
        }
        (z < x.size() ? g.count_x : g.count_y).back() += 1;
        g.members.back().push_back(z);
    }
    return g;
}

/// Crisp graph (d <= epsilon, grade 1) or fuzzy support graph (d < epsilon')
/// over the collapsed groups.
inline ToleranceGraph group_graph(const GroupedUnion& g, const ToleranceConfig& cfg, bool fuzzy) {
    const std::size_t n = g.reps.size();
    ToleranceGraph graph(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = description_distance(*g.reps[i], *g.reps[j], cfg);
            if (fuzzy) {
                const double grade = tolerance_grade(d, cfg);
                if (grade > 0.0) graph.add_edge(i, j, grade);
            } else if (d <= cfg.epsilon) {
                graph.add_edge(i, j, 1.0);
            }
        }
    return graph;
}

struct MeasureSums {
    double weight = 0.0;
    double weighted_ratio = 0.0;
    std::size_t classes = 0;

    void add(double in_x, double in_y) {
        const double card = in_x + in_y;
        const double hi = std::max(in_x, in_y);
        const double lo = std::min(in_x, in_y);
        weight += card;
        weighted_ratio += card * (lo / hi);
        ++classes;
    }

    double value() const {
        if (classes == 0 || !(weight > 0.0)) throw Error("nearness: no tolerance classes over a non-empty union");
        return std::clamp(1.0 - weighted_ratio / weight, 0.0, 1.0);
    }
};

/// Crisp class splits tallied by (smaller side, larger side) and summed in
/// key order, so the value does not depend on clique discovery order.
struct CrispSplits {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
    std::size_t classes = 0;

    void add(std::uint64_t in_x, std::uint64_t in_y) {
        ++counts[{std::min(in_x, in_y), std::max(in_x, in_y)}];
        ++classes;
    }

    double value() const {
        double weight = 0.0, weighted_ratio = 0.0;
        for (const auto& [split, n] : counts) {
            const auto [lo, hi] = split;
            const auto size = lo + hi;
            weight += static_cast<double>(n * size);
            weighted_ratio += static_cast<double>(n) * (static_cast<double>(size * lo) / static_cast<double>(hi));
        }
        if (classes == 0 || !(weight > 0.0)) throw Error("nearness: no tolerance classes over a non-empty union");
        return std::clamp(1.0 - weighted_ratio / weight, 0.0, 1.0);
    }
};

inline NearnessScore crisp_nearness(DescribedImage x, DescribedImage y, const ToleranceConfig& cfg,
                                    const CliqueLimits& limits, Envelope env) {
    cfg.validate();
    const auto groups = group_union(x, y, env);
    const auto graph = group_graph(groups, cfg, false);
    CrispSplits sums;
    const auto status = for_each_maximal_clique(graph.adjacency(), limits, [&](std::span<const std::uint32_t> c) {
        std::uint64_t cx = 0, cy = 0;
        for (auto node : c) {
            cx += groups.count_x[node];
            cy += groups.count_y[node];
        }
        sums.add(cx, cy);
    });
    NearnessScore s;
    s.measure = Measure::tnm;
    s.value = sums.value();
    s.classes = sums.classes;
    s.status = status;
    return s;
}

inline NearnessScore fuzzy_nearness(DescribedImage x, DescribedImage y, const ToleranceConfig& cfg,
                                    const CliqueLimits& limits, Envelope env) {
    cfg.validate();
    const auto groups = group_union(x, y, env);
    const auto graph = group_graph(groups, cfg, true);
    MeasureSums sums;
    std::vector<double> mu;
    const auto status = for_each_maximal_clique(graph.adjacency(), limits, [&](std::span<const std::uint32_t> c) {
        mu.assign(c.size(), 1.0);
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = a + 1; b < c.size(); ++b) {
                const double gr = graph.grade(c[a], c[b]);
                if (gr < mu[a]) mu[a] = gr;
                if (gr < mu[b]) mu[b] = gr;
            }
        double fx = 0.0, fy = 0.0;
        for (std::size_t a = 0; a < c.size(); ++a) {
            fx += mu[a] * groups.count_x[c[a]];
            fy += mu[a] * groups.count_y[c[a]];
        }
        sums.add(fx, fy);
    });
    NearnessScore s;
    s.measure = Measure::tfnm;
    s.value = sums.value();
    s.classes = sums.classes;
    s.status = status;
    return s;
}

}  // namespace detail

/// Crisp tolerance nearness measure. Classes are the maximal cliques of the
/// crisp relation at epsilon over the chosen description envelope.
inline NearnessScore tnm(DescribedImage x, DescribedImage y, const ToleranceConfig& cfg,
                         const CliqueLimits& limits = {}, Envelope env = Envelope::lower) {
    return detail::crisp_nearness(x, y, cfg, limits, env);
}

/// Fuzzy tolerance nearness measure. Classes are the maximal cliques of the
/// support graph (d < epsilon'); each member's grade is its smallest edge
/// grade inside the class, and class sizes are fuzzy cardinalities.
inline NearnessScore tfnm(DescribedImage x, DescribedImage y, const ToleranceConfig& cfg, Envelope env,
                          const CliqueLimits& limits = {}) {
    return detail::fuzzy_nearness(x, y, cfg, limits, env);
}

/// Mean of the fuzzy measure over the upper and the lower fuzzified vectors.
inline NearnessScore it2bfnm(DescribedImage x, DescribedImage y, const ToleranceConfig& cfg,
                             const CliqueLimits& limits = {}) {
    const auto up = detail::fuzzy_nearness(x, y, cfg, limits, Envelope::upper);
    const auto lo = detail::fuzzy_nearness(x, y, cfg, limits, Envelope::lower);
    NearnessScore s;
    s.measure = Measure::it2bfnm;
    s.upper = up.value;
    s.lower = lo.value;
    s.value = (up.value + lo.value) / 2.0;
    s.classes = up.classes + lo.classes;
    s.status = up.approximate() ? up.status : lo.status;
    return s;
}

inline NearnessScore nearness(Measure m, DescribedImage x, DescribedImage y, const ToleranceConfig& cfg,
                              const CliqueLimits& limits = {}, Envelope env = Envelope::lower) {
    switch (m) {
        case Measure::tnm: return tnm(x, y, cfg, limits, env);
        case Measure::tfnm: return tfnm(x, y, cfg, env, limits);
        case Measure::it2bfnm: return it2bfnm(x, y, cfg, limits);
    }
    throw InvalidParameter("unknown measure");
}

/// Tolerance classes over Z = X u Y (X indices first, then Y), expanded from
/// the collapsed groups. Crisp classes carry grade 1 on every member.
/// Throws BudgetExceeded when a limit trips.
inline std::vector<FuzzyToleranceClass> tolerance_classes(DescribedImage x, DescribedImage y,
                                                          const ToleranceConfig& cfg, bool fuzzy,
                                                          Envelope env = Envelope::lower,
                                                          const CliqueLimits& limits = {}) {
    cfg.validate();
    const auto groups = detail::group_union(x, y, env);
    const auto graph = detail::group_graph(groups, cfg, fuzzy);
    std::vector<FuzzyToleranceClass> out;
    const auto status = for_each_maximal_clique(graph.adjacency(), limits, [&](std::span<const std::uint32_t> c) {
        const auto grouped = make_fuzzy_class(Clique(c.begin(), c.end()), graph);
        std::vector<std::pair<std::uint32_t, double>> expanded;
        for (std::size_t k = 0; k < grouped.members.size(); ++k)
            for (auto z : groups.members[grouped.members[k]]) expanded.emplace_back(z, grouped.mu[k]);
        std::sort(expanded.begin(), expanded.end());
        FuzzyToleranceClass cls;
        for (const auto& [z, m] : expanded) {
            cls.members.push_back(z);
            cls.mu.push_back(m);
        }
        out.push_back(std::move(cls));
    });
    std::sort(out.begin(), out.end(),
              [](const FuzzyToleranceClass& a, const FuzzyToleranceClass& b) { return a.members < b.members; });
    if (status != EnumerationStatus::complete) {
        std::vector<Clique> partial;
        for (auto& c : out) partial.push_back(c.members);
        throw BudgetExceeded(status, std::move(partial));
    }
    return out;
}

/// True iff some tolerance class meets both X and Y. Every tolerant pair
/// (x, y) extends to a maximal clique, so this reduces to the existence of
/// one tolerant cross pair.
inline bool weakly_near(DescribedImage x, DescribedImage y, const ToleranceConfig& cfg,
                        Envelope env = Envelope::lower) {
    for (const auto& a : x)
        for (const auto& b : y)
            if (crisp_tolerance(a, b, cfg, env)) return true;
    return false;
}

}  // namespace it2near
