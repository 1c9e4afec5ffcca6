#pragma once

// Dataset indexing and query-by-example ranking.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clique.hpp"
#include "errors.hpp"
#include "nearness.hpp"
#include "parallel.hpp"
#include "perceptual.hpp"
#include "tolerance.hpp"

namespace it2near {

namespace fs = std::filesystem;

struct IndexedImage {
    int id = 0;
    int category = 0;
    std::string filename;
    int rows = 0;
    int cols = 0;
    std::vector<ObjectDescription> objects;

    friend bool operator==(const IndexedImage&, const IndexedImage&) = default;
};

struct DatasetIndex {
    DescriptionConfig config;
    std::string fingerprint;
    std::string root;
    std::vector<IndexedImage> images;  ///< ascending id

    const IndexedImage* find(int id) const {
        auto it = std::lower_bound(images.begin(), images.end(), id,
                                   [](const IndexedImage& im, int v) { return im.id < v; });
        return it != images.end() && it->id == id ? &*it : nullptr;
    }

    std::set<int> categories() const {
        std::set<int> out;
        for (const auto& im : images) out.insert(im.category);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Dataset layout

struct DatasetEntry {
    int id = 0;
    int category = 0;
    std::string filename;  ///< relative to the dataset root
};

inline bool is_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    static const std::set<std::string> known = {".jpg", ".jpeg", ".png", ".bmp", ".ppm",
                                                ".pgm", ".tif", ".tiff", ".webp"};
    return known.count(ext) != 0;
}

inline std::optional<int> parse_id(const std::string& s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || v < 0 || s.empty()) return std::nullopt;
    return v;
}

inline std::string trim(std::string s) {
    const auto issp = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && issp(s[b])) ++b;
    return s.substr(b);
}

/// Lists the images of a dataset directory.
///
/// With a labels.csv (`filename,category` rows, optional header) the listed
/// files are used; ids are the numeric file stems when every stem is an
/// integer and the row order otherwise. Without it, every image file named
/// `<id>.<ext>` is used and its category is id / 100.
inline std::vector<DatasetEntry> scan_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw DatasetError("dataset directory not found: " + root.string());
    std::vector<DatasetEntry> out;
    const fs::path labels = root / "labels.csv";
    if (fs::exists(labels)) {
        std::ifstream in(labels);
        std::string line;
        std::vector<std::pair<std::string, int>> rows;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            const auto comma = line.rfind(',');
            if (comma == std::string::npos) throw DatasetError("labels.csv: malformed row '" + line + "'");
            const std::string name = trim(line.substr(0, comma));
            const auto cat = parse_id(trim(line.substr(comma + 1)));
            if (!cat) {
                if (rows.empty() && out.empty()) continue;  // header
                throw DatasetError("labels.csv: bad category in row '" + line + "'");
            }
            rows.emplace_back(name, *cat);
        }
        bool numeric = true;
        for (const auto& [name, cat] : rows) numeric = numeric && parse_id(fs::path(name).stem().string()).has_value();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const int id = numeric ? *parse_id(fs::path(rows[i].first).stem().string()) : static_cast<int>(i);
            out.push_back({id, rows[i].second, rows[i].first});
        }
    } else {
        for (const auto& e : fs::directory_iterator(root)) {
            if (!e.is_regular_file() || !is_image_extension(e.path())) continue;
            const auto id = parse_id(e.path().stem().string());
            if (!id) continue;
            out.push_back({*id, *id / 100, e.path().filename().string()});
        }
    }
    std::sort(out.begin(), out.end(), [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].id == out[i - 1].id) throw DatasetError("duplicate image id " + std::to_string(out[i].id));
    if (out.empty()) throw DatasetError("dataset contains no images: " + root.string());
    return out;
}

using ImageDecoder = std::function<Image(const fs::path&)>;

struct IndexFailure {
    std::string filename;
    std::string reason;
};

struct IndexBuildReport {
    std::vector<IndexFailure> failures;
};

/// Describes every decodable image of the dataset. Decode failures are
/// collected in the report; an index with no images is an error.
inline DatasetIndex build_index(const fs::path& root, const DescriptionConfig& cfg, const ImageDecoder& decode,
                                unsigned jobs = 1, IndexBuildReport* report = nullptr) {
    cfg.validate();
    const auto entries = scan_dataset(root);
    std::vector<std::optional<IndexedImage>> slots(entries.size());
    std::vector<std::string> errors(entries.size());
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
        const auto& e = entries[i];
        try {
            const Image img = decode(root / e.filename);
            IndexedImage im;
            im.id = e.id;
            im.category = e.category;
            im.filename = e.filename;
            im.rows = img.height / cfg.block_height;
            im.cols = img.width / cfg.block_width;
            im.objects = describe_image(img, cfg, e.id);
            slots[i] = std::move(im);
        } catch (const std::exception& ex) {
            errors[i] = ex.what();
        }
    });
    DatasetIndex index;
    index.config = cfg;
    index.fingerprint = config_fingerprint(cfg);
    index.root = root.string();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (slots[i])
            index.images.push_back(std::move(*slots[i]));
        else if (report)
            report->failures.push_back({entries[i].filename, errors[i]});
    }
    if (index.images.empty()) throw DatasetError("no image of the dataset could be indexed");
    return index;
}

/// Same index, fuzzified with another bank (raw features are reused).
inline DatasetIndex rebank_index(const DatasetIndex& index, const BankSpec& bank, unsigned jobs = 1) {
    DatasetIndex out;
    out.config = index.config;
    out.config.bank = bank;
    out.config.validate();
    out.fingerprint = config_fingerprint(out.config);
    out.root = index.root;
    out.images.resize(index.images.size());
    const auto lb = build_bank(bank);
    parallel_for(index.images.size(), jobs, [&](std::size_t i) {
        const auto& src = index.images[i];
        auto& dst = out.images[i];
        dst.id = src.id;
        dst.category = src.category;
        dst.filename = src.filename;
        dst.rows = src.rows;
        dst.cols = src.cols;
        dst.objects = refuzzify(src.objects, lb);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Query

struct QueryImage {
    std::string fingerprint;
    std::vector<ObjectDescription> objects;
    std::optional<int> image_id;  ///< set when the query is an indexed image
    std::string tag;
};

inline QueryImage indexed_query(const DatasetIndex& index, int id) {
    const auto* im = index.find(id);
    if (!im) throw InvalidParameter("image id " + std::to_string(id) + " is not in the index");
    return {index.fingerprint, im->objects, id, std::to_string(id)};
}

inline QueryImage external_query(const DatasetIndex& index, const Image& img, std::string tag,
                                 const DescriptionConfig* cfg = nullptr) {
    const auto& c = cfg ? *cfg : index.config;
    return {config_fingerprint(c), describe_image(img, c, -1), std::nullopt, std::move(tag)};
}

struct QueryOptions {
    Measure measure = Measure::it2bfnm;
    ToleranceConfig tolerance;
    CliqueLimits limits;
    Envelope envelope = Envelope::lower;  ///< for tnm and tfnm
    std::size_t k = 40;
    unsigned jobs = 1;

    void validate() const {
        tolerance.validate();
        if (k == 0) throw InvalidParameter("k must be at least 1");
    }
};

struct RankedItem {
    int image_id = 0;
    int category = 0;
    NearnessScore score;
};

struct RankedResult {
    std::string query_tag;
    std::optional<int> query_id;
    Measure measure = Measure::it2bfnm;
    std::vector<RankedItem> items;  ///< ascending score, ties: query image, then ascending id

    std::vector<int> ids() const {
        std::vector<int> out;
        out.reserve(items.size());
        for (const auto& it : items) out.push_back(it.image_id);
        return out;
    }
};

/// Ascending score; among equal scores the query image itself (when given)
/// comes first, then ascending image id.
inline void sort_ranking(std::vector<RankedItem>& items, std::optional<int> query_id = std::nullopt) {
    std::sort(items.begin(), items.end(), [query_id](const RankedItem& a, const RankedItem& b) {
        if (a.score.value != b.score.value) return a.score.value < b.score.value;
        if (query_id && (a.image_id == *query_id) != (b.image_id == *query_id)) return a.image_id == *query_id;
        return a.image_id < b.image_id;
    });
}

/// Scores the query against every indexed image and returns the best k.
inline RankedResult query(const DatasetIndex& index, const QueryImage& q, const QueryOptions& opts) {
    opts.validate();
    if (q.fingerprint != index.fingerprint) throw FingerprintMismatch(index.fingerprint, q.fingerprint);
    RankedResult out;
    out.query_tag = q.tag;
    out.query_id = q.image_id;
    out.measure = opts.measure;
    out.items.resize(index.images.size());
    parallel_for(index.images.size(), opts.jobs, [&](std::size_t i) {
        const auto& im = index.images[i];
        out.items[i] = {im.id, im.category,
                        nearness(opts.measure, q.objects, im.objects, opts.tolerance, opts.limits, opts.envelope)};
    });
    sort_ranking(out.items, q.image_id);
    if (out.items.size() > opts.k) out.items.resize(opts.k);
    return out;
}

}  // namespace it2near
