#pragma once

// Image blocks as perceptual objects: partitioning, probe functions,
// fuzzification and the composed image description.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "membership.hpp"

namespace it2near {

/// 8-bit interleaved RGB raster.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* pixel(int x, int y) noexcept { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* pixel(int x, int y) const noexcept {
        return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
        auto* p = pixel(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
};

/// Read-only window onto one block of an image.
class PixelBlock {
public:
    PixelBlock(const Image& img, int x0, int y0, int w, int h) : img_(&img), x0_(x0), y0_(y0), w_(w), h_(h) {}

    int width() const noexcept { return w_; }
    int height() const noexcept { return h_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(w_) * h_; }
    const std::uint8_t* at(int x, int y) const noexcept { return img_->pixel(x0_ + x, y0_ + y); }

    /// Gray level in [0, 255]: unweighted channel mean.
    double gray(int x, int y) const noexcept {
        const auto* p = at(x, y);
        return (static_cast<double>(p[0]) + p[1] + p[2]) / 3.0;
    }

private:
    const Image* img_;
    int x0_, y0_, w_, h_;
};

struct BlockGrid {
    int image_id = 0;
    int image_width = 0;
    int image_height = 0;
    int block_width = 0;
    int block_height = 0;
    int rows = 0;
    int cols = 0;

    int block_count() const noexcept { return rows * cols; }
};

struct Partition {
    BlockGrid grid;
    std::vector<PixelBlock> blocks;  ///< row-major
};

/// Splits an image into equal blocks; partial border strips are dropped.
inline Partition partition_image(const Image& img, int block_width, int block_height, int image_id = 0) {
    if (block_width <= 0 || block_height <= 0) throw InvalidParameter("block dimensions must be positive");
    if (img.width < block_width || img.height < block_height) {
        std::ostringstream msg;
        msg << "ImageTooSmall: " << img.width << "x" << img.height << " image cannot hold one " << block_width << "x"
            << block_height << " block";
        throw ImageTooSmall(msg.str());
    }
    Partition p;
    p.grid = {image_id, img.width, img.height, block_width, block_height, img.height / block_height,
              img.width / block_width};
    p.blocks.reserve(p.grid.block_count());
    for (int r = 0; r < p.grid.rows; ++r)
        for (int c = 0; c < p.grid.cols; ++c)
            p.blocks.emplace_back(img, c * block_width, r * block_height, block_width, block_height);
    return p;
}

// ---------------------------------------------------------------------------
// Probe functions

using ProbeFunction = std::function<double(const PixelBlock&)>;

namespace probes {

inline double channel_mean(const PixelBlock& b, int ch) {
    double sum = 0.0;
    for (int y = 0; y < b.height(); ++y)
        for (int x = 0; x < b.width(); ++x) sum += b.at(x, y)[ch];
    return sum / (255.0 * static_cast<double>(b.size()));
}

inline double mean_gray(const PixelBlock& b) {
    double sum = 0.0;
    for (int y = 0; y < b.height(); ++y)
        for (int x = 0; x < b.width(); ++x) sum += b.gray(x, y);
    return sum / (255.0 * static_cast<double>(b.size()));
}

/// Population standard deviation of gray levels over the largest possible value, 127.5.
inline double gray_stddev(const PixelBlock& b) {
    const double n = static_cast<double>(b.size());
    double sum = 0.0, sq = 0.0;
    for (int y = 0; y < b.height(); ++y)
        for (int x = 0; x < b.width(); ++x) {
            const double g = b.gray(x, y);
            sum += g;
            sq += g * g;
        }
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    return std::min(1.0, std::sqrt(var) / 127.5);
}

/// Fraction of pixels whose Sobel gradient magnitude exceeds 0.2.
///
/// Gray is scaled to [0, 1] and the Sobel response divided by 4, so a unit
/// step edge has magnitude 1. Neighbors outside the block are clamped to the
/// block edge, which keeps the feature a function of the block alone.
inline double edge_density(const PixelBlock& b) {
    const int w = b.width(), h = b.height();
    std::vector<double> g(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g[static_cast<std::size_t>(y) * w + x] = b.gray(x, y) / 255.0;
    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return g[static_cast<std::size_t>(y) * w + x];
    };
    std::size_t edges = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            if (std::hypot(gx, gy) / 4.0 > 0.2) ++edges;
        }
    return static_cast<double>(edges) / static_cast<double>(b.size());
}

}  // namespace probes

/// Name -> probe function. Every probe returns a value in [0, 1].
class ProbeRegistry {
public:
    static const ProbeRegistry& defaults() {
        static const ProbeRegistry reg = [] {
            ProbeRegistry r;
            r.add("mean_gray", probes::mean_gray);
            r.add("mean_r", [](const PixelBlock& b) { return probes::channel_mean(b, 0); });
            r.add("mean_g", [](const PixelBlock& b) { return probes::channel_mean(b, 1); });
            r.add("mean_b", [](const PixelBlock& b) { return probes::channel_mean(b, 2); });
            r.add("gray_std", probes::gray_stddev);
            r.add("edge_density", probes::edge_density);
            return r;
        }();
        return reg;
    }

    static std::vector<std::string> default_probe_set() {
        return {"mean_gray", "mean_r", "mean_g", "mean_b", "gray_std", "edge_density"};
    }

    void add(std::string id, ProbeFunction fn) { probes_[std::move(id)] = std::move(fn); }

    bool contains(const std::string& id) const { return probes_.count(id) != 0; }

    const ProbeFunction& get(const std::string& id) const {
        auto it = probes_.find(id);
        if (it == probes_.end()) throw UnknownProbe(id);
        return it->second;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : probes_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, ProbeFunction> probes_;
};

inline std::vector<double> extract_features(const PixelBlock& block, std::span<const std::string> probe_set,
                                            const ProbeRegistry& registry = ProbeRegistry::defaults()) {
    if (block.size() == 0) throw InvalidParameter("cannot extract features from an empty block");
    std::vector<double> out;
    out.reserve(probe_set.size());
    for (const auto& id : probe_set) out.push_back(std::clamp(registry.get(id)(block), 0.0, 1.0));
    return out;
}

// ---------------------------------------------------------------------------
// Fuzzification

struct FuzzyVectors {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Grades of every bank term at every feature value, feature-major
/// (index = feature * M + term).
inline FuzzyVectors fuzzify(std::span<const double> raw, const LinguisticBank& bank) {
    FuzzyVectors out;
    const std::size_t m = bank.size();
    out.lower.reserve(raw.size() * m);
    out.upper.reserve(raw.size() * m);
    for (double v : raw)
        for (std::size_t t = 0; t < m; ++t) {
            const auto g = bank.grade(t, v);
            out.lower.push_back(g.lower);
            out.upper.push_back(g.upper);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Object descriptions

struct ObjectId {
    int image_id = 0;
    int row = 0;
    int col = 0;

    friend bool operator==(const ObjectId&, const ObjectId&) = default;
    friend auto operator<=>(const ObjectId&, const ObjectId&) = default;
};

struct ObjectDescription {
    ObjectId id;
    std::vector<double> raw;
    std::vector<double> lower;
    std::vector<double> upper;

    friend bool operator==(const ObjectDescription&, const ObjectDescription&) = default;
};

/// Everything that determines how an image is turned into descriptions.
struct DescriptionConfig {
    int block_width = 13;
    int block_height = 19;
    std::vector<std::string> probes = ProbeRegistry::default_probe_set();
    BankSpec bank;

    void validate(const ProbeRegistry& registry = ProbeRegistry::defaults()) const {
        if (block_width <= 0 || block_height <= 0) throw InvalidParameter("block dimensions must be positive");
        if (probes.empty()) throw InvalidParameter("probe set must not be empty");
        for (const auto& p : probes)
            if (!registry.contains(p)) throw UnknownProbe(p);
        bank.validate();
    }

    std::size_t description_length() const noexcept { return probes.size() * static_cast<std::size_t>(bank.terms); }
};

/// Rounds to the 9-significant-digit text form used by the index file, so
/// in-memory descriptions and re-read ones are bit-identical.
inline double quantize(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Canonical text of a description config; the fingerprint hashes this.
inline std::string canonical_config(const DescriptionConfig& cfg) {
    std::ostringstream s;
    s << "block=" << cfg.block_width << "x" << cfg.block_height << ";probes=";
    for (std::size_t i = 0; i < cfg.probes.size(); ++i) s << (i ? "," : "") << cfg.probes[i];
    s << ";bank=" << to_string(cfg.bank.family) << ",terms=" << cfg.bank.terms
      << ",spread=" << format_real(cfg.bank.it2_spread) << ",alpha=" << format_real(cfg.bank.alpha)
      << ",beta=" << format_real(cfg.bank.beta) << ",centers=" << to_string(cfg.bank.center_mode) << ";digits=9";
    return s.str();
}

/// 64-bit FNV-1a of the canonical config, as 16 hex digits.
inline std::string config_fingerprint(const DescriptionConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical_config(cfg)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Fuzzifies raw features into a description with quantized vectors.
inline ObjectDescription make_description(ObjectId id, std::vector<double> raw, const LinguisticBank& bank) {
    ObjectDescription d;
    d.id = id;
    for (double& v : raw) v = quantize(v);
    auto fz = fuzzify(raw, bank);
    for (double& v : fz.lower) v = quantize(v);
    for (double& v : fz.upper) v = quantize(v);
    d.raw = std::move(raw);
    d.lower = std::move(fz.lower);
    d.upper = std::move(fz.upper);
    return d;
}

/// One description per block, row-major.
inline std::vector<ObjectDescription> describe_image(const Image& img, const DescriptionConfig& cfg, int image_id = 0,
                                                     const ProbeRegistry& registry = ProbeRegistry::defaults()) {
    cfg.validate(registry);
    const auto part = partition_image(img, cfg.block_width, cfg.block_height, image_id);
    const auto bank = build_bank(cfg.bank);
    std::vector<ObjectDescription> out;
    out.reserve(part.blocks.size());
    for (int r = 0; r < part.grid.rows; ++r)
        for (int c = 0; c < part.grid.cols; ++c) {
            const auto& block = part.blocks[static_cast<std::size_t>(r) * part.grid.cols + c];
            out.push_back(make_description({image_id, r, c}, extract_features(block, cfg.probes, registry), bank));
        }
    return out;
}

/// Re-fuzzifies existing raw features with a different bank.
inline std::vector<ObjectDescription> refuzzify(std::span<const ObjectDescription> objects, const LinguisticBank& bank) {
    std::vector<ObjectDescription> out;
    out.reserve(objects.size());
    for (const auto& o : objects) out.push_back(make_description(o.id, o.raw, bank));
    return out;
}

}  // namespace it2near
