#pragma once

// Versioned text format for a DatasetIndex.
//
//   it2near-index 1
//   fingerprint <16 hex>
//   config <canonical config text>
//   block <width> <height>
//   probes <id> <id> ...
//   bank <family> <terms> <spread> <alpha> <beta> <center mode>
//   root <dataset directory>
//   images <count>
//   image <id> <category> <rows> <cols> <filename>        (one per image)
//   blocks <count>
//   b <image> <row> <col> <raw...> <lower...> <upper...>  (one per block)
//
// Reals use 9 significant digits. Identical indexes serialize to identical
// bytes.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "retrieval.hpp"

namespace it2near {

inline constexpr int kIndexFormatVersion = 1;

inline void write_index(std::ostream& out, const DatasetIndex& index) {
    const auto& cfg = index.config;
    out << "it2near-index " << kIndexFormatVersion << '\n';
    out << "fingerprint " << index.fingerprint << '\n';
    out << "config " << canonical_config(cfg) << '\n';
    out << "block " << cfg.block_width << ' ' << cfg.block_height << '\n';
    out << "probes";
    for (const auto& p : cfg.probes) out << ' ' << p;
    out << '\n';
    out << "bank " << to_string(cfg.bank.family) << ' ' << cfg.bank.terms << ' ' << format_real(cfg.bank.it2_spread)
        << ' ' << format_real(cfg.bank.alpha) << ' ' << format_real(cfg.bank.beta) << ' '
        << to_string(cfg.bank.center_mode) << '\n';
    out << "root " << index.root << '\n';
    out << "images " << index.images.size() << '\n';
    std::size_t blocks = 0;
    for (const auto& im : index.images) {
        out << "image " << im.id << ' ' << im.category << ' ' << im.rows << ' ' << im.cols << ' ' << im.filename
            << '\n';
        blocks += im.objects.size();
    }
    out << "blocks " << blocks << '\n';
    std::string line;
    for (const auto& im : index.images)
        for (const auto& o : im.objects) {
            line.clear();
            line += "b " + std::to_string(o.id.image_id) + ' ' + std::to_string(o.id.row) + ' ' +
                    std::to_string(o.id.col);
            for (const auto* v : {&o.raw, &o.lower, &o.upper})
                for (double x : *v) {
                    line += ' ';
                    line += format_real(x);
                }
            line += '\n';
            out << line;
        }
}

inline void save_index(const fs::path& path, const DatasetIndex& index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IndexFormatError("cannot write index file " + path.string());
    write_index(out, index);
    if (!out) throw IndexFormatError("error while writing index file " + path.string());
}

namespace detail {

inline std::string expect_key(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw IndexFormatError("index: unexpected end of file, expected '" + key + "'");
    if (line.rfind(key + " ", 0) != 0 && line != key)
        throw IndexFormatError("index: expected '" + key + "' record, got '" + line.substr(0, 40) + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string{};
}

}  // namespace detail

inline DatasetIndex read_index(std::istream& in) {
    DatasetIndex index;
    {
        std::string line;
        std::getline(in, line);
        if (line != "it2near-index " + std::to_string(kIndexFormatVersion))
            throw IndexFormatError("not an index file of format version " + std::to_string(kIndexFormatVersion));
    }
    index.fingerprint = detail::expect_key(in, "fingerprint");
    const std::string canonical = detail::expect_key(in, "config");
    auto& cfg = index.config;
    {
        std::istringstream s(detail::expect_key(in, "block"));
        s >> cfg.block_width >> cfg.block_height;
    }
    {
        std::istringstream s(detail::expect_key(in, "probes"));
        cfg.probes.clear();
        for (std::string p; s >> p;) cfg.probes.push_back(p);
    }
    {
        std::istringstream s(detail::expect_key(in, "bank"));
        std::string family, mode;
        s >> family >> cfg.bank.terms >> cfg.bank.it2_spread >> cfg.bank.alpha >> cfg.bank.beta >> mode;
        if (!s) throw IndexFormatError("index: malformed bank record");
        cfg.bank.family = parse_bank_family(family);
        cfg.bank.center_mode = parse_center_mode(mode);
    }
    if (canonical_config(cfg) != canonical || config_fingerprint(cfg) != index.fingerprint)
        throw IndexFormatError("index: header fingerprint does not match its configuration");
    index.root = detail::expect_key(in, "root");

    const std::size_t n_images = std::stoul(detail::expect_key(in, "images"));
    index.images.resize(n_images);
    for (auto& im : index.images) {
        std::istringstream s(detail::expect_key(in, "image"));
        s >> im.id >> im.category >> im.rows >> im.cols;
        s.get();
        std::getline(s, im.filename);
        if (s.bad()) throw IndexFormatError("index: malformed image record");
    }
    const std::size_t n_blocks = std::stoul(detail::expect_key(in, "blocks"));
    const std::size_t n_raw = cfg.probes.size();
    const std::size_t n_fuzzy = cfg.description_length();

    std::size_t cursor = 0;
    std::string line;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        if (!std::getline(in, line) || line.rfind("b ", 0) != 0) throw IndexFormatError("index: truncated block list");
        const char* p = line.c_str() + 2;
        char* end = nullptr;
        ObjectDescription o;
        o.id.image_id = static_cast<int>(std::strtol(p, &end, 10));
        o.id.row = static_cast<int>(std::strtol(end, &end, 10));
        o.id.col = static_cast<int>(std::strtol(end, &end, 10));
        auto read_reals = [&](std::vector<double>& v, std::size_t count) {
            v.resize(count);
            for (auto& x : v) {
                const char* before = end;
                x = std::strtod(end, &end);
                if (end == before) throw IndexFormatError("index: short block record");
            }
        };
        read_reals(o.raw, n_raw);
        read_reals(o.lower, n_fuzzy);
        read_reals(o.upper, n_fuzzy);
        while (cursor < index.images.size() && index.images[cursor].id != o.id.image_id) ++cursor;
        if (cursor == index.images.size()) throw IndexFormatError("index: block refers to an unknown or unordered image");
        index.images[cursor].objects.push_back(std::move(o));
    }
    return index;
}

inline DatasetIndex load_index(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IndexFormatError("cannot open index file " + path.string());
    return read_index(in);
}

}  // namespace it2near
