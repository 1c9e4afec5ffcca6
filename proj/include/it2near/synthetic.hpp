#pragma once

// Seeded synthetic rasters for tests and desk-scale experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "perceptual.hpp"

namespace it2near {

enum class Pattern { stripes, checker, gradient };

inline std::string to_string(Pattern p) {
    switch (p) {
        case Pattern::stripes: return "stripes";
        case Pattern::checker: return "checker";
        case Pattern::gradient: return "gradient";
    }
    return "?";
}

inline Pattern parse_pattern(const std::string& s) {
    if (s == "stripes") return Pattern::stripes;
    if (s == "checker") return Pattern::checker;
    if (s == "gradient") return Pattern::gradient;
    throw InvalidParameter("unknown synthetic pattern '" + s + "'");
}

struct SyntheticOptions {
    int width = 384;
    int height = 256;
    int noise = 3;  ///< uniform per-channel noise amplitude in gray levels
};

namespace detail {

struct Rgb {
    double r, g, b;
};

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace detail

/// One image of the given pattern family. Each family has its own color
/// range (stripes dark red, checker cyan, gradient yellow); geometry, phase and
/// exact colors are drawn from `rng`.
inline Image generate_pattern(Pattern pattern, std::mt19937_64& rng, const SyntheticOptions& opts = {}) {
    if (opts.width <= 0 || opts.height <= 0) throw InvalidParameter("synthetic image size must be positive");
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    Image img(opts.width, opts.height);
    detail::Rgb c1{}, c2{};
    int period = 0, phase = 0;
    bool vertical = false;
    switch (pattern) {
        case Pattern::stripes:
            c1 = {uni(200, 240), uni(20, 50), uni(20, 50)};
            c2 = {c1.r * 0.35, c1.g * 0.35, c1.b * 0.35};
            period = pick(3, 6);
            phase = pick(0, period - 1);
            vertical = pick(0, 1) == 1;
            break;
        case Pattern::checker:
            c1 = {uni(20, 50), uni(200, 240), uni(200, 240)};
            c2 = {c1.r * 0.85, c1.g * 0.85, c1.b * 0.85};
            period = pick(24, 40);
            phase = pick(0, period - 1);
            break;
        case Pattern::gradient:
            c1 = {uni(200, 230), uni(170, 200), uni(10, 40)};
            c2 = {uni(235, 255), uni(225, 250), uni(40, 70)};
            vertical = pick(0, 1) == 1;
            break;
    }
    std::uniform_int_distribution<int> noise(-opts.noise, opts.noise);
    for (int y = 0; y < opts.height; ++y)
        for (int x = 0; x < opts.width; ++x) {
            detail::Rgb c{};
            switch (pattern) {
                case Pattern::stripes: {
                    const int t = (vertical ? x : y) + phase;
                    c = ((t / period) % 2 == 0) ? c1 : c2;
                    break;
                }
                case Pattern::checker: {
                    const int a = (x + phase) / period, b = (y + phase) / period;
                    c = ((a + b) % 2 == 0) ? c1 : c2;
                    break;
                }
                case Pattern::gradient: {
                    const double t = vertical ? static_cast<double>(y) / std::max(1, opts.height - 1)
                                              : static_cast<double>(x) / std::max(1, opts.width - 1);
                    c = {c1.r + t * (c2.r - c1.r), c1.g + t * (c2.g - c1.g), c1.b + t * (c2.b - c1.b)};
                    break;
                }
            }
            const int nr = opts.noise ? noise(rng) : 0;
            const int ng = opts.noise ? noise(rng) : 0;
            const int nb = opts.noise ? noise(rng) : 0;
            img.set(x, y, detail::to_byte(c.r + nr), detail::to_byte(c.g + ng), detail::to_byte(c.b + nb));
        }
    return img;
}

struct SyntheticImage {
    int id;
    int category;
    Pattern pattern;
    Image image;
};

/// `per_category` images for each pattern; image ids are
/// category * per_category + i and categories follow the pattern order.
inline std::vector<SyntheticImage> generate_dataset(const std::vector<Pattern>& patterns, int per_category,
                                                    std::uint64_t seed, const SyntheticOptions& opts = {}) {
    if (per_category <= 0) throw InvalidParameter("images per category must be positive");
    std::mt19937_64 rng(seed);
    std::vector<SyntheticImage> out;
    for (std::size_t c = 0; c < patterns.size(); ++c)
        for (int i = 0; i < per_category; ++i) {
            const int id = static_cast<int>(c) * per_category + i;
            out.push_back({id, static_cast<int>(c), patterns[c], generate_pattern(patterns[c], rng, opts)});
        }
    return out;
}

}  // namespace it2near
