#pragma once

// JSON-over-HTTP query service for the browser UI.
//
//   GET  /api/health            status and index fingerprint
//   GET  /api/config            defaults and dataset statistics
//   POST /api/query             JSON body, or multipart with an `image` file
//                               and an optional `params` JSON part
//   GET  /api/image/{id}        original image bytes
//   GET  /api/image/{id}/thumb  JPEG thumbnail
//   /                           static UI bundle, when a directory is given

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "errors.hpp"
#include "image_io.hpp"
#include "nearness.hpp"
#include "retrieval.hpp"

namespace it2near {

inline constexpr int kApiVersion = 1;
inline constexpr std::size_t kMaxUploadBytes = 10 * 1024 * 1024;

struct ServiceOptions {
    std::string dataset_root;  ///< overrides the root recorded in the index
    std::string ui_dir;        ///< static bundle served at "/"
    unsigned jobs = 1;
    CliqueLimits limits;
    ToleranceConfig tolerance;  ///< request defaults
    std::size_t default_k = 40;
};

class HttpError : public Error {
public:
    HttpError(int status, std::string code, const std::string& message)
        : Error(message), status_(status), code_(std::move(code)) {}
    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }

private:
    int status_;
    std::string code_;
};

struct QueryRequest {
    std::optional<int> image_id;
    Measure measure = Measure::it2bfnm;
    ToleranceConfig tolerance;
    double spread = 0.1;
    std::size_t k = 40;
    Envelope envelope = Envelope::lower;
};

inline nlohmann::json score_json(const RankedItem& item, std::size_t rank) {
    nlohmann::json r = {
        {"rank", rank},
        {"image_id", item.image_id},
        {"category", item.category},
        {"score", item.score.value},
        {"similarity", 1.0 - item.score.value},
        {"classes", item.score.classes},
        {"budget_flag", to_string(item.score.status)},
    };
    r["upper"] = item.score.upper ? nlohmann::json(*item.score.upper) : nlohmann::json(nullptr);
    r["lower"] = item.score.lower ? nlohmann::json(*item.score.lower) : nlohmann::json(nullptr);
    return r;
}

/// Request handling independent of the transport. The base index is never
/// modified; re-fuzzified variants for other spreads are cached.
class QueryService {
public:
    QueryService(DatasetIndex index, ServiceOptions opts)
        : base_(std::make_shared<const DatasetIndex>(std::move(index))), opts_(std::move(opts)) {
        if (opts_.dataset_root.empty()) opts_.dataset_root = base_->root;
    }

    const DatasetIndex& index() const noexcept { return *base_; }
    const ServiceOptions& options() const noexcept { return opts_; }

    nlohmann::json health() const {
        return {{"api_version", kApiVersion}, {"status", "ok"}, {"fingerprint", base_->fingerprint}};
    }

    nlohmann::json config() const {
        std::map<int, int> per_category;
        std::size_t blocks = 0;
        for (const auto& im : base_->images) {
            ++per_category[im.category];
            blocks += im.objects.size();
        }
        nlohmann::json cats = nlohmann::json::array();
        for (const auto& [c, n] : per_category) cats.push_back({{"category", c}, {"images", n}});
        const auto& cfg = base_->config;
        return {
            {"api_version", kApiVersion},
            {"fingerprint", base_->fingerprint},
            {"defaults",
             {{"measure", "it2bfnm"},
              {"epsilon", opts_.tolerance.epsilon},
              {"epsilon_prime", opts_.tolerance.epsilon_prime},
              {"spread", cfg.bank.it2_spread},
              {"k", opts_.default_k}}},
            {"measures", {"tnm", "tfnm", "it2bfnm"}},
            {"description",
             {{"block_width", cfg.block_width},
              {"block_height", cfg.block_height},
              {"probes", cfg.probes},
              {"bank_family", to_string(cfg.bank.family)},
              {"terms", cfg.bank.terms}}},
            {"dataset",
             {{"images", base_->images.size()}, {"blocks", blocks}, {"categories", cats}}},
            {"max_upload_bytes", kMaxUploadBytes},
        };
    }

    QueryRequest parse_request(const nlohmann::json& body) const {
        QueryRequest req;
        req.tolerance = opts_.tolerance;
        req.spread = base_->config.bank.it2_spread;
        req.k = opts_.default_k;
        try {
            if (body.contains("api_version") && body["api_version"].get<int>() != kApiVersion)
                throw HttpError(400, "UnsupportedApiVersion", "unsupported api_version");
            if (body.contains("image_id") && !body["image_id"].is_null()) req.image_id = body["image_id"].get<int>();
            if (body.contains("measure")) req.measure = parse_measure(body["measure"].get<std::string>());
            if (body.contains("epsilon")) req.tolerance.epsilon = body["epsilon"].get<double>();
            if (body.contains("epsilon_prime")) req.tolerance.epsilon_prime = body["epsilon_prime"].get<double>();
            if (body.contains("spread")) req.spread = body["spread"].get<double>();
            if (body.contains("envelope"))
                req.envelope = body["envelope"].get<std::string>() == "upper" ? Envelope::upper : Envelope::lower;
            if (body.contains("k")) {
                const auto k = body["k"].get<long long>();
                if (k < 1) throw HttpError(400, "InvalidParameter", "k must be at least 1");
                req.k = static_cast<std::size_t>(k);
            }
        } catch (const nlohmann::json::exception& e) {
            throw HttpError(400, "BadRequest", std::string("malformed request field: ") + e.what());
        } catch (const InvalidParameter& e) {
            throw HttpError(400, "InvalidParameter", e.what());
        }
        try {
            req.tolerance.validate();
        } catch (const InvalidParameter& e) {
            throw HttpError(400, "InvalidParameter", e.what());
        }
        if (!(req.spread >= 0.0)) throw HttpError(400, "InvalidParameter", "spread must be non-negative");
        return req;
    }

    /// Runs a query for an indexed image, or for an uploaded image when
    /// `upload` is given. Uploads are described with the index configuration
    /// and never added to the index.
    nlohmann::json run_query(const QueryRequest& req, const std::string* upload = nullptr) const {
        const auto t0 = std::chrono::steady_clock::now();
        const auto idx = index_for_spread(req.spread);
        QueryImage q;
        if (upload) {
            Image img;
            try {
                img = decode_image_bytes(
                    std::span(reinterpret_cast<const std::uint8_t*>(upload->data()), upload->size()));
            } catch (const Error& e) {
                throw HttpError(400, "DecodeError", e.what());
            }
            try {
                q = external_query(*idx, img, "upload");
            } catch (const ImageTooSmall& e) {
                throw HttpError(400, "ImageTooSmall", e.what());
            }
        } else if (req.image_id) {
            if (!idx->find(*req.image_id))
                throw HttpError(404, "UnknownImage", "image " + std::to_string(*req.image_id) + " is not indexed");
            q = indexed_query(*idx, *req.image_id);
        } else {
            throw HttpError(400, "BadRequest", "request needs image_id or an uploaded image");
        }
        QueryOptions qo;
        qo.measure = req.measure;
        qo.tolerance = req.tolerance;
        qo.limits = opts_.limits;
        qo.envelope = req.envelope;
        qo.k = req.k;
        qo.jobs = opts_.jobs;
        const auto result = query(*idx, q, qo);

        nlohmann::json results = nlohmann::json::array();
        bool budget = false;
        for (std::size_t i = 0; i < result.items.size(); ++i) {
            results.push_back(score_json(result.items[i], i + 1));
            budget = budget || result.items[i].score.approximate();
        }
        const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return {
            {"api_version", kApiVersion},
            {"query",
             {{"image_id", req.image_id ? nlohmann::json(*req.image_id) : nlohmann::json(nullptr)},
              {"source", upload ? "upload" : "index"},
              {"measure", to_string(req.measure)},
              {"epsilon", req.tolerance.epsilon},
              {"epsilon_prime", req.tolerance.epsilon_prime},
              {"spread", req.spread},
              {"k", req.k}}},
            {"results", results},
            {"timing_ms", ms},
            {"budget_exceeded", budget},
        };
    }

    std::optional<std::filesystem::path> image_path(int id) const {
        const auto* im = base_->find(id);
        if (!im) return std::nullopt;
        auto p = std::filesystem::path(opts_.dataset_root) / im->filename;
        if (!std::filesystem::is_regular_file(p)) return std::nullopt;
        return p;
    }

private:
    std::shared_ptr<const DatasetIndex> index_for_spread(double spread) const {
        if (spread == base_->config.bank.it2_spread) return base_;
        std::lock_guard lock(mu_);
        auto& slot = rebanked_[spread];
        if (!slot) {
            auto bank = base_->config.bank;
            bank.it2_spread = spread;
            slot = std::make_shared<const DatasetIndex>(rebank_index(*base_, bank, opts_.jobs));
        }
        return slot;
    }

    std::shared_ptr<const DatasetIndex> base_;
    ServiceOptions opts_;
    mutable std::mutex mu_;
    mutable std::map<double, std::shared_ptr<const DatasetIndex>> rebanked_;
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"api_version", kApiVersion}, {"error", {{"code", code}, {"message", message}}}});
}

inline std::string mime_for(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".bmp") return "image/bmp";
    if (ext == ".webp") return "image/webp";
    if (ext == ".tif" || ext == ".tiff") return "image/tiff";
    return "application/octet-stream";
}

}  // namespace detail

/// Registers every endpoint of the service on `server`.
inline void mount_service(httplib::Server& server, const QueryService& svc) {
    using httplib::Request;
    using httplib::Response;

    server.set_payload_max_length(kMaxUploadBytes);
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/api/.*)", [](const Request&, Response& res) { res.status = 204; });

    server.Get("/api/health", [&svc](const Request&, Response& res) { detail::send_json(res, 200, svc.health()); });
    server.Get("/api/config", [&svc](const Request&, Response& res) { detail::send_json(res, 200, svc.config()); });

    server.Post("/api/query", [&svc](const Request& req, Response& res) {
        try {
            if (req.is_multipart_form_data()) {
                nlohmann::json params = nlohmann::json::object();
                if (req.has_file("params")) params = nlohmann::json::parse(req.get_file_value("params").content);
                for (const char* key : {"measure", "epsilon", "epsilon_prime", "spread", "k", "envelope"}) {
                    if (!req.has_file(key)) continue;
                    const auto& v = req.get_file_value(key).content;
                    if (std::string(key) == "measure" || std::string(key) == "envelope")
                        params[key] = v;
                    else
                        params[key] = nlohmann::json::parse(v);
                }
                const auto parsed = svc.parse_request(params);
                if (!req.has_file("image")) throw HttpError(400, "BadRequest", "multipart query needs an image part");
                const auto& file = req.get_file_value("image");
                detail::send_json(res, 200, svc.run_query(parsed, &file.content));
            } else {
                const auto body = nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body);
                detail::send_json(res, 200, svc.run_query(svc.parse_request(body)));
            }
        } catch (const HttpError& e) {
            detail::send_error(res, e.status(), e.code(), e.what());
        } catch (const nlohmann::json::exception& e) {
            detail::send_error(res, 400, "BadRequest", e.what());
        } catch (const InvalidParameter& e) {
            detail::send_error(res, 400, "InvalidParameter", e.what());
        } catch (const std::exception& e) {
            detail::send_error(res, 500, "InternalError", e.what());
        }
    });

    server.Get(R"(/api/image/(-?\d+))", [&svc](const Request& req, Response& res) {
        const auto path = svc.image_path(std::stoi(req.matches[1]));
        if (!path) return detail::send_error(res, 404, "UnknownImage", "no such image");
        std::ifstream in(*path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        res.set_content(buf.str(), detail::mime_for(*path));
    });

    server.Get(R"(/api/image/(-?\d+)/thumb)", [&svc](const Request& req, Response& res) {
        const auto path = svc.image_path(std::stoi(req.matches[1]));
        if (!path) return detail::send_error(res, 404, "UnknownImage", "no such image");
        try {
            const auto bytes = encode_thumbnail(*path);
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/jpeg");
        } catch (const Error& e) {
            detail::send_error(res, 500, "DecodeError", e.what());
        }
    });

    const auto& ui = svc.options().ui_dir;
    if (!ui.empty() && std::filesystem::is_directory(ui)) server.set_mount_point("/", ui);
}

}  // namespace it2near
