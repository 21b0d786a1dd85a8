#pragma once

// HTTP embedding endpoint and client. Wire format:
//   POST /v1/embeddings  {"input": [string, ...]}
//   -> 200 {"model_id": string, "data": [{"index": i, "embedding": [number, ...]}, ...]}
//   GET /healthz -> 200 "ok"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <httplib.h>
#include <json.hpp>

#include "embmarker/error.hpp"
#include "embmarker/verification.hpp"

namespace embmarker {

inline constexpr std::size_t kMaxBatchSize = 1024;
inline constexpr std::string_view kEmbeddingsPath = "/v1/embeddings";
inline constexpr std::string_view kDefaultBindAddress = "127.0.0.1:8080";

struct EmbedRequest {
  std::vector<std::string> input;
};

struct EmbedResponse {
  std::string model_id;
  std::vector<Eigen::VectorXd> data;  // position == index
};

inline std::string serialize_request(const EmbedRequest& r) { return nlohmann::json{{"input", r.input}}.dump(); }

inline EmbedRequest parse_request(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, "malformed JSON");
  if (!j.is_object() || !j.contains("input") || !j["input"].is_array()) {
    throw Error(ErrorCode::kParseError, "expected an object with an 'input' array");
  }
  EmbedRequest r;
  for (const auto& item : j["input"]) {
    if (!item.is_string()) throw Error(ErrorCode::kParseError, "'input' entries must be strings");
    r.input.push_back(item.get<std::string>());
  }
  if (r.input.empty() || r.input.size() > kMaxBatchSize) {
    throw Error(ErrorCode::kParseError, "'input' must hold 1.." + std::to_string(kMaxBatchSize) + " texts");
  }
  return r;
}

inline std::string serialize_response(const EmbedResponse& r) {
  nlohmann::json data = nlohmann::json::array();
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    data.push_back({{"index", i}, {"embedding", embedding_to_json(r.data[i])}});
  }
  return nlohmann::json{{"model_id", r.model_id}, {"data", std::move(data)}}.dump();
}

inline EmbedResponse parse_response(std::string_view body, std::size_t expected) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("data") || !j["data"].is_array()) {
    throw Error(ErrorCode::kParseError, "malformed embeddings response");
  }
  EmbedResponse r;
  r.model_id = j.value("model_id", "");
  const auto& data = j["data"];
  if (data.size() != expected) {
    throw Error(ErrorCode::kParseError,
                "response has " + std::to_string(data.size()) + " items, expected " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].at("index").get<std::size_t>() != i) throw Error(ErrorCode::kParseError, "response out of order");
    r.data.push_back(embedding_from_json(data[i].at("embedding")));
  }
  return r;
}

// "host:port"
inline std::pair<std::string, int> split_bind_address(std::string_view address) {
  auto colon = address.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::kInvalidArgument, "bind address needs host:port");
  try {
    return {std::string(address.substr(0, colon)), std::stoi(std::string(address.substr(colon + 1)))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in '" + std::string(address) + "'");
  }
}

// EMBMARK_BIND replaces the default address; an explicit port replaces the port.
inline std::string resolve_bind_address(std::optional<int> port) {
  std::string address(kDefaultBindAddress);
  if (const char* env = std::getenv("EMBMARK_BIND"); env != nullptr && *env != '\0') address = env;
  if (port) address = split_bind_address(address).first + ":" + std::to_string(*port);
  return address;
}

// Serves one embedding function until destroyed. The function must be safe
// to call concurrently.
class EmbeddingServer {
 public:
  using EmbedFn = std::function<Eigen::VectorXd(const std::string&)>;

  EmbeddingServer(EmbedFn fn, std::string model_id, const std::string& bind_address)
      : fn_(std::move(fn)), model_id_(std::move(model_id)) {
    auto [host, port] = split_bind_address(bind_address);
    host_ = host;
    // httplib's defaults add SO_REUSEPORT, which lets a second server share
    // the port silently.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server_.Post(std::string(kEmbeddingsPath),
                 [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) throw Error(ErrorCode::kAddressInUse, "cannot bind " + bind_address);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  EmbeddingServer(const EmbeddingServer&) = delete;
  EmbeddingServer& operator=(const EmbeddingServer&) = delete;

  ~EmbeddingServer() { stop(); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  // Blocks until stop() is called from elsewhere.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string endpoint() const { return "http://" + host_ + ":" + std::to_string(port_); }
  std::size_t request_count() const { return requests_.load(); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    EmbedRequest parsed;
    try {
      parsed = parse_request(req.body);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    try {
      EmbedResponse out{model_id_, {}};
      out.data.reserve(parsed.input.size());
      for (const auto& text : parsed.input) out.data.push_back(fn_(text));
      res.set_content(serialize_response(out), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  EmbedFn fn_;
  std::string model_id_;
  std::string host_;
  int port_ = -1;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<std::size_t> requests_{0};
};

inline std::unique_ptr<EmbeddingServer> serve(EmbeddingServer::EmbedFn fn, const std::string& bind_address,
                                              std::string model_id = "embmarker") {
  return std::make_unique<EmbeddingServer>(std::move(fn), std::move(model_id), bind_address);
}

struct QueryOptions {
  std::size_t max_batch = kMaxBatchSize;
  int retries = 3;
  std::chrono::milliseconds backoff{50};
  std::chrono::seconds timeout{30};
};

// [begin, end) ranges covering n items in chunks of at most max_batch.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t max_batch) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t b = 0; b < n; b += max_batch) ranges.emplace_back(b, std::min(n, b + max_batch));
  return ranges;
}

// Embeds `texts` through the endpoint, batching and retrying transient
// failures (connection errors and 5xx) with exponential backoff.
inline std::vector<Eigen::VectorXd> query(const std::string& endpoint, std::span<const std::string> texts,
                                          const QueryOptions& opt = {}) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  httplib::Client client(endpoint);
  client.set_read_timeout(opt.timeout);
  client.set_connection_timeout(opt.timeout);
  for (auto [begin, end] : batch_ranges(texts.size(), std::max<std::size_t>(1, std::min(opt.max_batch, kMaxBatchSize)))) {
    EmbedRequest req{{texts.begin() + static_cast<std::ptrdiff_t>(begin), texts.begin() + static_cast<std::ptrdiff_t>(end)}};
    const std::string body = serialize_request(req);
    std::string last_error = "no attempt made";
    bool done = false;
    for (int attempt = 0; attempt <= opt.retries && !done; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(opt.backoff * (1 << (attempt - 1)));
      auto res = client.Post(std::string(kEmbeddingsPath), body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::kServiceUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body);
      }
      try {
        auto parsed = parse_response(res->body, end - begin);
        for (auto& e : parsed.data) out.push_back(std::move(e));
        done = true;
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!done) {
      throw Error(ErrorCode::kServiceUnavailable,
                  "gave up after " + std::to_string(opt.retries + 1) + " attempts: " + last_error);
    }
  }
  return out;
}

// A remote endpoint as an EmbeddingService.
inline EmbeddingService http_service(std::string endpoint, QueryOptions opt = {}) {
  return [endpoint = std::move(endpoint), opt](std::span<const std::string> texts) { return query(endpoint, texts, opt); };
}

}  // namespace embmarker
