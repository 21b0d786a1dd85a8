#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include <gtest/gtest.h>

// Eigen has to come before httplib: <resolv.h> defines a `_res` macro.
#include "embmarker/service.hpp"
#include "test_support.hpp"

#include <httplib.h>

namespace em = embmarker;
using em::ErrorCode;
using em::testing::expect_error;

namespace {

Eigen::VectorXd toy_embed(const std::string& text) {
  Eigen::VectorXd v(3);
  v << static_cast<double>(text.size()), 1.0 / 3.0, -0.1 * static_cast<double>(text.size());
  return v;
}

std::vector<std::string> numbered_texts(std::size_t n) {
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) texts.push_back("text " + std::to_string(i));
  return texts;
}

}  // namespace

TEST(WireFormat, RequestRoundTripAndLimits) {
  const em::EmbedRequest req{{"a", "b c"}};
  EXPECT_EQ(em::parse_request(em::serialize_request(req)).input, req.input);
  for (const char* bad : {"not json", "[]", "{\"input\": \"x\"}", "{\"input\": [1]}", "{\"input\": []}"}) {
    expect_error(ErrorCode::kParseError, [&] { em::parse_request(bad); });
  }
  EXPECT_NO_THROW(em::parse_request(em::serialize_request({numbered_texts(1024)})));
  expect_error(ErrorCode::kParseError, [] { em::parse_request(em::serialize_request({numbered_texts(1025)})); });
}

TEST(WireFormat, ResponseRoundTripIsExact) {
  em::EmbedResponse res{"m", {toy_embed("abc"), toy_embed("de")}};
  const auto back = em::parse_response(em::serialize_response(res), 2);
  EXPECT_EQ(back.model_id, "m");
  EXPECT_EQ(back.data[0], res.data[0]);
  EXPECT_EQ(back.data[1], res.data[1]);
  expect_error(ErrorCode::kParseError, [&] { em::parse_response(em::serialize_response(res), 3); });
}

TEST(BatchRanges, CoverEverythingInOrder) {
  const auto r = em::batch_ranges(2500, 1024);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0], (std::pair<std::size_t, std::size_t>{0, 1024}));
  EXPECT_EQ(r[2], (std::pair<std::size_t, std::size_t>{2048, 2500}));
  EXPECT_TRUE(em::batch_ranges(0, 1024).empty());
}

TEST(BindAddress, EnvironmentAndPortOverrides) {
  ::unsetenv("EMBMARK_BIND");
  EXPECT_EQ(em::resolve_bind_address(std::nullopt), "127.0.0.1:8080");
  EXPECT_EQ(em::resolve_bind_address(9000), "127.0.0.1:9000");
  ::setenv("EMBMARK_BIND", "0.0.0.0:7000", 1);
  EXPECT_EQ(em::resolve_bind_address(std::nullopt), "0.0.0.0:7000");
  EXPECT_EQ(em::resolve_bind_address(7001), "0.0.0.0:7001");
  ::unsetenv("EMBMARK_BIND");
  expect_error(ErrorCode::kInvalidArgument, [] { em::split_bind_address("nohost"); });
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override { server_ = em::serve(toy_embed, "127.0.0.1:0", "toy"); }
  std::unique_ptr<em::EmbeddingServer> server_;
};

TEST_F(ServerTest, HealthAndEmbeddings) {
  httplib::Client client(server_->endpoint());
  auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->body, "ok");

  auto res = client.Post("/v1/embeddings", R"({"input": ["ab", "cde"]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto parsed = em::parse_response(res->body, 2);
  EXPECT_EQ(parsed.model_id, "toy");
  EXPECT_EQ(parsed.data[1], toy_embed("cde"));
}

TEST_F(ServerTest, MalformedBodiesGet400) {
  httplib::Client client(server_->endpoint());
  for (const char* body : {"{oops", R"({"input": []})", R"({"texts": ["a"]})"}) {
    auto res = client.Post("/v1/embeddings", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400) << body;
    EXPECT_TRUE(nlohmann::json::parse(res->body).contains("error"));
  }
}

TEST_F(ServerTest, LoopbackMatchesInProcessAndBatches) {
  const auto texts = numbered_texts(1500);
  const auto before = server_->request_count();
  const auto remote = em::query(server_->endpoint(), texts);
  EXPECT_EQ(server_->request_count() - before, 2u);
  ASSERT_EQ(remote.size(), texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(remote[i], toy_embed(texts[i])) << i;
}

TEST_F(ServerTest, BindingATakenPortFails) {
  expect_error(ErrorCode::kAddressInUse,
               [&] { em::serve(toy_embed, "127.0.0.1:" + std::to_string(server_->port())); });
}

TEST(ServerErrors, EmbedFailureGives500AndIsRetried) {
  std::atomic<int> calls{0};
  auto flaky = [&calls](const std::string& text) {
    if (calls++ < 2) throw std::runtime_error("model warming up");
    return toy_embed(text);
  };
  auto server = em::serve(flaky, "127.0.0.1:0");
  httplib::Client client(server->endpoint());
  auto res = client.Post("/v1/embeddings", R"({"input": ["x"]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 500);

  em::QueryOptions opt;
  opt.backoff = std::chrono::milliseconds(1);
  const std::vector<std::string> texts{"x"};
  const auto out = em::query(server->endpoint(), texts, opt);
  EXPECT_EQ(out.front(), toy_embed("x"));
  EXPECT_EQ(server->request_count(), 3u);
}

TEST(ServerErrors, GivesUpAfterRetries) {
  auto broken = [](const std::string&) -> Eigen::VectorXd { throw std::runtime_error("down"); };
  auto server = em::serve(broken, "127.0.0.1:0");
  em::QueryOptions opt;
  opt.retries = 2;
  opt.backoff = std::chrono::milliseconds(1);
  const std::vector<std::string> texts{"x"};
  expect_error(ErrorCode::kServiceUnavailable, [&] { em::query(server->endpoint(), texts, opt); });
  EXPECT_EQ(server->request_count(), 3u);
}

TEST(ServerErrors, UnreachableEndpoint) {
  std::string endpoint;
  {
    auto server = em::serve(toy_embed, "127.0.0.1:0");
    endpoint = server->endpoint();
  }
  em::QueryOptions opt;
  opt.retries = 1;
  opt.backoff = std::chrono::milliseconds(1);
  opt.timeout = std::chrono::seconds(2);
  const std::vector<std::string> texts{"x"};
  expect_error(ErrorCode::kServiceUnavailable, [&] { em::query(endpoint, texts, opt); });
}

TEST(HttpService, WorksAsAnEmbeddingService) {
  auto server = em::serve(toy_embed, "127.0.0.1:0");
  const auto service = em::http_service(server->endpoint());
  const auto texts = numbered_texts(3);
  const auto out = em::query_service(service, texts);
  EXPECT_EQ(out[2], toy_embed(texts[2]));
}
