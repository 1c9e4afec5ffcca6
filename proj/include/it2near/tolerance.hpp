#pragma once

// Crisp and fuzzy tolerance relations between object descriptions, and the
// tolerance graph whose maximal cliques are the tolerance classes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitset.hpp"
#include "errors.hpp"
#include "perceptual.hpp"

namespace it2near {

enum class DistanceMode { full_vector, per_feature_existential };
enum class Envelope { lower, upper };

inline std::string to_string(Envelope e) { return e == Envelope::upper ? "upper" : "lower"; }
inline std::string to_string(DistanceMode m) {
    return m == DistanceMode::full_vector ? "full-vector" : "per-feature-existential";
}

struct ToleranceConfig {
    double epsilon = 0.3;
    double epsilon_prime = 0.45;
    DistanceMode distance_mode = DistanceMode::full_vector;
    bool normalize_by_dimension = true;

    void validate() const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidParameter("epsilon must be positive");
        if (!(epsilon_prime > epsilon) || !std::isfinite(epsilon_prime))
            throw InvalidParameter("epsilon' must be greater than epsilon");
    }
};

inline const std::vector<double>& envelope_vector(const ObjectDescription& o, Envelope e) noexcept {
    return e == Envelope::upper ? o.upper : o.lower;
}

/// Distance between two description vectors.
///
/// full_vector: Euclidean distance, divided by sqrt(length) when normalizing.
/// per_feature_existential: the smallest per-component difference, so that
/// "d <= epsilon" holds iff some single feature agrees within epsilon.
inline double description_distance(std::span<const double> a, std::span<const double> b, const ToleranceConfig& cfg) {
    if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
    if (a.empty()) return 0.0;
    if (cfg.distance_mode == DistanceMode::per_feature_existential) {
        double best = std::abs(a[0] - b[0]);
        for (std::size_t i = 1; i < a.size(); ++i) best = std::min(best, std::abs(a[i] - b[i]));
        return best;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        sq += t * t;
    }
    if (cfg.normalize_by_dimension) sq /= static_cast<double>(a.size());
    return std::sqrt(sq);
}

/// Ramp grade: 1 up to and including epsilon, linear down to 0 at epsilon'
/// (exclusive), 0 beyond.
inline double tolerance_grade(double d, const ToleranceConfig& cfg) noexcept {
    if (d <= cfg.epsilon) return 1.0;
    if (d < cfg.epsilon_prime) return (cfg.epsilon_prime - d) / (cfg.epsilon_prime - cfg.epsilon);
    return 0.0;
}

inline bool crisp_tolerance(const ObjectDescription& x, const ObjectDescription& y, const ToleranceConfig& cfg,
                            Envelope env = Envelope::lower) {
    return description_distance(envelope_vector(x, env), envelope_vector(y, env), cfg) <= cfg.epsilon;
}

inline double fuzzy_tolerance(const ObjectDescription& x, const ObjectDescription& y, const ToleranceConfig& cfg,
                              Envelope env) {
    return tolerance_grade(description_distance(envelope_vector(x, env), envelope_vector(y, env), cfg), cfg);
}

/// Indices of all objects tolerant to objects[x], including x itself.
inline std::vector<std::size_t> neighborhood(std::size_t x, std::span<const ObjectDescription> objects,
                                             const ToleranceConfig& cfg, Envelope env = Envelope::lower) {
    if (x >= objects.size()) throw InvalidParameter("neighborhood: object index out of range");
    std::vector<std::size_t> out;
    for (std::size_t y = 0; y < objects.size(); ++y)
        if (y == x || crisp_tolerance(objects[x], objects[y], cfg, env)) out.push_back(y);
    return out;
}

/// Symmetric, irreflexive graph with a grade in (0, 1] on every edge.
class ToleranceGraph {
public:
    explicit ToleranceGraph(std::size_t n = 0) : n_(n), adj_(n, Bitset(n)), grades_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }

    void add_edge(std::size_t i, std::size_t j, double grade) {
        if (i == j) return;
        adj_[i].set(j);
        adj_[j].set(i);
        grades_[i * n_ + j] = grade;
        grades_[j * n_ + i] = grade;
    }

    bool adjacent(std::size_t i, std::size_t j) const noexcept { return adj_[i].test(j); }

    /// Edge grade; 1 on the diagonal, 0 for non-edges.
    double grade(std::size_t i, std::size_t j) const noexcept { return i == j ? 1.0 : grades_[i * n_ + j]; }

    const Bitset& neighbors(std::size_t i) const noexcept { return adj_[i]; }
    std::span<const Bitset> adjacency() const noexcept { return adj_; }

    std::size_t edge_count() const noexcept {
        std::size_t c = 0;
        for (const auto& row : adj_) c += row.count();
        return c / 2;
    }

private:
    std::size_t n_;
    std::vector<Bitset> adj_;
    std::vector<double> grades_;
};

/// Fuzzy support graph: edge (i, j) with grade g iff g = fuzzy_tolerance(i, j) > 0.
inline ToleranceGraph build_tolerance_graph(std::span<const ObjectDescription> objects, const ToleranceConfig& cfg,
                                            Envelope env) {
    cfg.validate();
    ToleranceGraph g(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i)
        for (std::size_t j = i + 1; j < objects.size(); ++j) {
            const double grade = fuzzy_tolerance(objects[i], objects[j], cfg, env);
            if (grade > 0.0) g.add_edge(i, j, grade);
        }
    return g;
}

/// Crisp graph at threshold epsilon; every edge has grade 1.
inline ToleranceGraph build_crisp_graph(std::span<const ObjectDescription> objects, const ToleranceConfig& cfg,
                                        Envelope env = Envelope::lower) {
    ToleranceGraph g(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i)
        for (std::size_t j = i + 1; j < objects.size(); ++j)
            if (crisp_tolerance(objects[i], objects[j], cfg, env)) g.add_edge(i, j, 1.0);
    return g;
}

struct FuzzyToleranceClass {
    std::vector<std::uint32_t> members;  ///< ascending node ids
    std::vector<double> mu;              ///< mu[k] is the grade of members[k]
};

/// Class grade of each member: the minimum edge grade to the other members.
/// Singletons get 1.
inline FuzzyToleranceClass make_fuzzy_class(std::vector<std::uint32_t> members, const ToleranceGraph& g) {
    std::sort(members.begin(), members.end());
    FuzzyToleranceClass c;
    c.mu.assign(members.size(), 1.0);
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            const double gr = g.grade(members[a], members[b]);
            c.mu[a] = std::min(c.mu[a], gr);
            c.mu[b] = std::min(c.mu[b], gr);
        }
    c.members = std::move(members);
    return c;
}

inline std::vector<FuzzyToleranceClass> fuzzy_classes(const std::vector<std::vector<std::uint32_t>>& cliques,
                                                      const ToleranceGraph& g) {
    std::vector<FuzzyToleranceClass> out;
    out.reserve(cliques.size());
    for (const auto& c : cliques) out.push_back(make_fuzzy_class(c, g));
    return out;
}

}  // namespace it2near
