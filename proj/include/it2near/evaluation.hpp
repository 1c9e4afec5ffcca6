#pragma once

// Retrieval quality: precision, recall, precision/recall curves and
// per-category average precision with every indexed image used as a query.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "retrieval.hpp"

namespace it2near {

inline std::size_t count_relevant(std::span<const int> retrieved, const std::set<int>& relevant) {
    return static_cast<std::size_t>(
        std::count_if(retrieved.begin(), retrieved.end(), [&](int id) { return relevant.count(id) != 0; }));
}

/// |relevant n retrieved| / |retrieved|
inline double precision(std::span<const int> retrieved, const std::set<int>& relevant) {
    if (retrieved.empty()) throw EmptyRetrieval();
    return static_cast<double>(count_relevant(retrieved, relevant)) / static_cast<double>(retrieved.size());
}

/// |relevant n retrieved| / |relevant|
inline double recall(std::span<const int> retrieved, const std::set<int>& relevant) {
    if (relevant.empty()) throw NoRelevantImages();
    return static_cast<double>(count_relevant(retrieved, relevant)) / static_cast<double>(relevant.size());
}

struct PrPoint {
    std::size_t k = 0;
    double precision = 0.0;
    double recall = 0.0;
};

/// One (precision, recall) pair per prefix length 1..min(max_k, |ranking|).
inline std::vector<PrPoint> pr_curve(std::span<const int> ranking, const std::set<int>& relevant, std::size_t max_k) {
    if (relevant.empty()) throw NoRelevantImages();
    if (ranking.empty() || max_k == 0) throw EmptyRetrieval();
    const std::size_t n = std::min(max_k, ranking.size());
    std::vector<PrPoint> out;
    out.reserve(n);
    std::size_t hits = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (relevant.count(ranking[k - 1])) ++hits;
        out.push_back({k, static_cast<double>(hits) / static_cast<double>(k),
                       static_cast<double>(hits) / static_cast<double>(relevant.size())});
    }
    return out;
}

inline std::vector<PrPoint> pr_curve(const RankedResult& result, const std::set<int>& relevant, std::size_t max_k) {
    const auto ids = result.ids();
    return pr_curve(ids, relevant, max_k);
}

struct EvalOptions {
    Measure measure = Measure::it2bfnm;
    ToleranceConfig tolerance;
    CliqueLimits limits;
    Envelope envelope = Envelope::lower;
    std::size_t depth = 100;
    std::size_t pr_depth = 40;
    bool exclude_self = false;
    std::set<int> exclude_categories;
    unsigned jobs = 1;
};

struct EvaluationReport {
    std::map<int, double> category_precision;  ///< category -> mean precision at depth
    std::vector<PrPoint> mean_curve;           ///< P/R averaged over all queries
    std::size_t queries = 0;
    std::size_t approximate_comparisons = 0;
};

/// Every included image is used as a query against all included images.
///
/// Each unordered pair is scored once and the score reused for both
/// directions; the measures are symmetric.
inline EvaluationReport evaluate(const DatasetIndex& index, const EvalOptions& opts) {
    opts.tolerance.validate();
    if (opts.depth == 0 || opts.pr_depth == 0) throw InvalidParameter("evaluation depth must be positive");

    std::vector<const IndexedImage*> pool;
    for (const auto& im : index.images)
        if (!opts.exclude_categories.count(im.category)) pool.push_back(&im);
    if (pool.empty()) throw InvalidParameter("no images left after category exclusion");
    const std::size_t n = pool.size();

    std::vector<NearnessScore> scores(n * n);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
    parallel_for(pairs.size(), opts.jobs, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const auto s = nearness(opts.measure, pool[i]->objects, pool[j]->objects, opts.tolerance, opts.limits,
                                opts.envelope);
        scores[i * n + j] = s;
        scores[j * n + i] = s;
    });

    EvaluationReport report;
    std::map<int, std::pair<double, std::size_t>> sums;
    std::vector<PrPoint> curve_sum;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<RankedItem> items;
        for (std::size_t j = 0; j < n; ++j) {
            if (opts.exclude_self && i == j) continue;
            items.push_back({pool[j]->id, pool[j]->category, scores[i * n + j]});
        }
        if (items.empty()) continue;
        sort_ranking(items, pool[i]->id);
        std::vector<int> ranking;
        for (const auto& it : items) ranking.push_back(it.image_id);
        std::set<int> relevant;
        for (std::size_t j = 0; j < n; ++j)
            if (pool[j]->category == pool[i]->category && !(opts.exclude_self && i == j)) relevant.insert(pool[j]->id);

        const std::size_t depth = std::min(opts.depth, ranking.size());
        auto& [sum, count] = sums[pool[i]->category];
        sum += precision(std::span<const int>(ranking).first(depth), relevant);
        ++count;

        if (!relevant.empty()) {
            const auto curve = pr_curve(ranking, relevant, opts.pr_depth);
            if (curve_sum.size() < curve.size()) curve_sum.resize(curve.size());
            for (std::size_t k = 0; k < curve.size(); ++k) {
                curve_sum[k].k = k + 1;
                curve_sum[k].precision += curve[k].precision;
                curve_sum[k].recall += curve[k].recall;
            }
        }
        ++report.queries;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (scores[i * n + j].approximate()) ++report.approximate_comparisons;

    for (const auto& [cat, sc] : sums) report.category_precision[cat] = sc.first / static_cast<double>(sc.second);
    for (auto& p : curve_sum) {
        p.precision /= static_cast<double>(report.queries);
        p.recall /= static_cast<double>(report.queries);
    }
    report.mean_curve = std::move(curve_sum);
    return report;
}

inline std::map<int, double> category_average_precision(const DatasetIndex& index, const EvalOptions& opts) {
    return evaluate(index, opts).category_precision;
}

}  // namespace it2near
