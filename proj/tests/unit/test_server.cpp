#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "it2near/server.hpp"
#include "it2near/synthetic.hpp"

using namespace it2near;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ServerTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("it2near-server-" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_ / "ui");
        std::ofstream(dir_ / "ui" / "index.html") << "<html>ui</html>";
        SyntheticOptions so;
        so.width = 65;
        so.height = 57;
        std::ofstream labels(dir_ / "labels.csv");
        for (const auto& im : generate_dataset({Pattern::stripes, Pattern::checker, Pattern::gradient}, 3, 0, so)) {
            write_image_file(dir_ / (std::to_string(im.id) + ".png"), im.image);
            labels << im.id << ".png," << im.category << '\n';
        }
        labels.close();
        ServiceOptions opts;
        opts.ui_dir = (dir_ / "ui").string();
        opts.jobs = 2;
        service_ = std::make_unique<QueryService>(build_index(dir_, DescriptionConfig{}, decode_image_file), opts);
        server_ = std::make_unique<httplib::Server>();
        mount_service(*server_, *service_);
        port_ = server_->bind_to_any_port("127.0.0.1");
        thread_ = std::thread([] { server_->listen_after_bind(); });
        server_->wait_until_ready();
    }

    static void TearDownTestSuite() {
        server_->stop();
        thread_.join();
        server_.reset();
        service_.reset();
        fs::remove_all(dir_);
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60);
        return c;
    }

    static json post(const json& body, int expect_status) {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60);
        auto res = c.Post("/api/query", body.dump(), "application/json");
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect_status) << res->body;
        return json::parse(res->body);
    }

    static inline fs::path dir_;
    static inline std::unique_ptr<QueryService> service_;
    static inline std::unique_ptr<httplib::Server> server_;
    static inline std::thread thread_;
    static inline int port_ = 0;
};

}  // namespace

TEST_F(ServerTest, Health) {
    auto res = client().Get("/api/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto body = json::parse(res->body);
    EXPECT_EQ(body["api_version"], kApiVersion);
    EXPECT_EQ(body["status"], "ok");
    EXPECT_EQ(body["fingerprint"], service_->index().fingerprint);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(ServerTest, Config) {
    auto res = client().Get("/api/config");
    ASSERT_TRUE(res);
    const auto body = json::parse(res->body);
    EXPECT_EQ(body["defaults"]["epsilon"], 0.3);
    EXPECT_EQ(body["defaults"]["epsilon_prime"], 0.45);
    EXPECT_EQ(body["dataset"]["images"], 9);
    EXPECT_EQ(body["dataset"]["blocks"], 135);
    EXPECT_EQ(body["dataset"]["categories"].size(), 3u);
}

TEST_F(ServerTest, QueryIndexedImage) {
    const auto body = post({{"api_version", 1}, {"image_id", 4}, {"k", 5}}, 200);
    ASSERT_EQ(body["results"].size(), 5u);
    EXPECT_EQ(body["results"][0]["image_id"], 4);
    EXPECT_EQ(body["results"][0]["score"], 0.0);
    EXPECT_EQ(body["results"][0]["similarity"], 1.0);
    EXPECT_EQ(body["results"][0]["rank"], 1);
    EXPECT_EQ(body["query"]["measure"], "it2bfnm");
    double last = -1;
    for (const auto& r : body["results"]) {
        EXPECT_GE(r["score"].get<double>(), last);
        last = r["score"];
        EXPECT_FALSE(r["upper"].is_null());
    }
}

TEST_F(ServerTest, QueryMatchesLibraryOrdering) {
    for (const char* m : {"tnm", "tfnm", "it2bfnm"}) {
        const auto body = post({{"image_id", 2}, {"measure", m}, {"k", 9}, {"epsilon", 0.25}, {"epsilon_prime", 0.4}}, 200);
        QueryOptions qo;
        qo.measure = parse_measure(m);
        qo.tolerance.epsilon = 0.25;
        qo.tolerance.epsilon_prime = 0.4;
        qo.k = 9;
        const auto expect = query(service_->index(), indexed_query(service_->index(), 2), qo);
        ASSERT_EQ(body["results"].size(), expect.items.size());
        for (std::size_t i = 0; i < expect.items.size(); ++i) {
            EXPECT_EQ(body["results"][i]["image_id"], expect.items[i].image_id);
            EXPECT_EQ(body["results"][i]["score"], expect.items[i].score.value);
        }
    }
}

TEST_F(ServerTest, SpreadChangeRefuzzifies) {
    const auto a = post({{"image_id", 1}, {"spread", 0.0}, {"k", 9}}, 200);
    for (const auto& r : a["results"]) EXPECT_EQ(r["upper"], r["lower"]);
    EXPECT_EQ(a["results"][0]["image_id"], 1);
    EXPECT_EQ(a["query"]["spread"], 0.0);
}

TEST_F(ServerTest, Rejections) {
    auto err = post({{"image_id", 1}, {"epsilon", 0.3}, {"epsilon_prime", 0.3}}, 400);
    EXPECT_EQ(err["api_version"], kApiVersion);
    EXPECT_EQ(err["error"]["code"], "InvalidParameter");
    EXPECT_EQ(post({{"image_id", 1}, {"k", 0}}, 400)["error"]["code"], "InvalidParameter");
    EXPECT_EQ(post({{"image_id", 1}, {"measure", "cosine"}}, 400)["error"]["code"], "InvalidParameter");
    EXPECT_EQ(post({{"image_id", "one"}}, 400)["error"]["code"], "BadRequest");
    EXPECT_EQ(post(json::object(), 400)["error"]["code"], "BadRequest");
    EXPECT_EQ(post({{"api_version", 7}, {"image_id", 1}}, 400)["error"]["code"], "UnsupportedApiVersion");
    EXPECT_EQ(post({{"image_id", 9999}}, 404)["error"]["code"], "UnknownImage");

    auto res = client().Post("/api/query", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
}

TEST_F(ServerTest, UploadQuery) {
    std::ifstream in(dir_ / "7.png", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), {});
    httplib::MultipartFormDataItems items = {
        {"image", bytes, "7.png", "image/png"},
        {"params", json({{"measure", "tfnm"}, {"k", 3}}).dump(), "", "application/json"},
    };
    auto res = client().Post("/api/query", items);
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
    const auto body = json::parse(res->body);
    EXPECT_EQ(body["query"]["source"], "upload");
    ASSERT_EQ(body["results"].size(), 3u);
    bool found = false;
    for (const auto& r : body["results"])
        if (r["image_id"] == 7) found = r["score"] == 0.0;
    EXPECT_TRUE(found);
    EXPECT_EQ(body["results"][0]["score"], 0.0);

    httplib::MultipartFormDataItems junk = {{"image", "garbage", "x.png", "image/png"}};
    res = client().Post("/api/query", junk);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"]["code"], "DecodeError");
}

TEST_F(ServerTest, OversizedUpload) {
    const std::string big(kMaxUploadBytes + 1024, 'x');
    httplib::MultipartFormDataItems items = {{"image", big, "big.png", "image/png"}};
    auto res = client().Post("/api/query", items);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 413);
}

TEST_F(ServerTest, Images) {
    auto res = client().Get("/api/image/3");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(decode_image_bytes(std::span(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size())).width, 65);

    res = client().Get("/api/image/3/thumb");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Content-Type"), "image/jpeg");

    res = client().Get("/api/image/9999");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    res = client().Get("/api/image/9999/thumb");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
}

TEST_F(ServerTest, StaticUiAndPreflight) {
    auto res = client().Get("/index.html");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, "<html>ui</html>");
    res = client().Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    res = client().Options("/api/query");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 204);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(ServerTest, ConcurrentQueriesAreIsolated) {
    std::vector<std::thread> threads;
    std::vector<json> results(6);
    for (int i = 0; i < 6; ++i)
        threads.emplace_back([&, i] {
            httplib::Client c("127.0.0.1", port_);
            c.set_read_timeout(60);
            auto res = c.Post("/api/query", json({{"image_id", i}, {"k", 9}, {"spread", i % 2 ? 0.05 : 0.1}}).dump(),
                              "application/json");
            if (res) results[i] = json::parse(res->body);
        });
    for (auto& t : threads) t.join();
    for (int i = 0; i < 6; ++i) {
        ASSERT_TRUE(results[i].contains("results")) << i;
        EXPECT_EQ(results[i]["results"][0]["image_id"], i);
    }
}
