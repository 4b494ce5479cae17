#include <gtest/gtest.h>

#include <thread>

#include "acrank/http_api.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace acrank;
using nlohmann::json;

namespace {

class HttpApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto idx = std::make_shared<PopularityIndex>();
    idx->set("hat", {5, 1});
    idx->set("hand soap", {3, 50});
    idx->set("hangers", {9, 10});
    std::vector<std::shared_ptr<const Ranker>> rankers = {std::make_shared<MpcRanker>(idx),
                                                          std::make_shared<MpgcRanker>(idx)};
    ctx_ = std::make_shared<SessionContextStore>();
    auto trie = std::make_shared<PrefixTrie>(
        PrefixTrie::build({{"hat", 5}, {"hand soap", 3}, {"hangers", 9}}));
    auto svc = std::make_shared<SuggestService>(trie, rankers, ctx_, "mpc", "abc123");
    server_ = std::make_unique<HttpServer>(svc);
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    // Wait until the listener accepts requests.
    for (int i = 0; i < 200; ++i) {
      if (client_->Get("/health")) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  std::shared_ptr<SessionContextStore> ctx_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(HttpApiTest, Health) {
  auto r = client_->Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["model_version"], "abc123");
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(HttpApiTest, Suggest) {
  auto r = client_->Get("/suggest?prefix=ha&session_id=s1&k=2");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["ranker"], "mpc");
  ASSERT_EQ(j["suggestions"].size(), 2u);
  EXPECT_EQ(j["suggestions"][0]["query"], "hangers");
  EXPECT_EQ(j["suggestions"][1]["query"], "hat");
  EXPECT_DOUBLE_EQ(j["suggestions"][0]["score"].get<double>(), 9.0);
  EXPECT_TRUE(j["latency_ms"].is_number());

  r = client_->Get("/suggest?prefix=ha&ranker=mpgc");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["suggestions"][0]["query"], "hand soap");

  r = client_->Get("/suggest?prefix=hand%20");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["suggestions"].size(), 1u);
}

TEST_F(HttpApiTest, BadRequests) {
  for (const char* path : {"/suggest?prefix=h&k=abc", "/suggest?prefix=h&k=-1",
                           "/suggest?prefix=h&k=3x", "/suggest?prefix=h&ranker=nope"}) {
    auto r = client_->Get(path);
    ASSERT_TRUE(r) << path;
    EXPECT_EQ(r->status, 400) << path;
    EXPECT_TRUE(json::parse(r->body).contains("error"));
  }
  auto r = client_->Post("/submit", "not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  r = client_->Post("/submit", R"({"session_id":"s"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  r = client_->Get("/nowhere");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
}

TEST_F(HttpApiTest, SubmitRecordsContext) {
  auto r = client_->Post("/submit", R"({"session_id":"s9","query":"Closet Organizer"})",
                         "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  const auto snap = ctx_->snapshot("s9");
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap[0].query, "closet organizer");
}

TEST_F(HttpApiTest, RankersAndPreflight) {
  auto r = client_->Get("/rankers");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body), json::parse(R"(["mpc","mpgc"])"));
  r = client_->Options("/suggest");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Methods"), "GET, POST, OPTIONS");
}

TEST(SuggestResponseJson, Shape) {
  SuggestResponse r{{{"hat", 1.5}}, "mpc", 0.25};
  const auto j = json::parse(suggest_response_json(r));
  EXPECT_EQ(j["ranker"], "mpc");
  EXPECT_EQ(j["suggestions"][0]["query"], "hat");
  EXPECT_EQ(j["latency_ms"], 0.25);
}
