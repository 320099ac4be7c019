#include "tpot/http_backend.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tpot/error.hpp"

namespace tpot {

struct HttpBackend::Impl {
  explicit Impl(const std::string& url) : client(url) {
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(300, 0);
  }
  std::mutex mutex;  // httplib::Client is not safe for concurrent requests
  httplib::Client client;
};

HttpBackend::HttpBackend(const std::string& base_url, int retries)
    : impl_(std::make_unique<Impl>(base_url)), retries_(std::max(1, retries)) {
  if (!impl_->client.is_valid()) fail(ErrorKind::Backend, "invalid sidecar URL " + base_url);
  std::string body;
  for (int attempt = 0;; ++attempt) {
    std::lock_guard lock(impl_->mutex);
    auto res = impl_->client.Get("/info");
    if (res && res->status == 200) {
      body = res->body;
      break;
    }
    if (attempt + 1 >= retries_) {
      fail(ErrorKind::Backend, "sidecar " + base_url + "/info unreachable after " +
                                   std::to_string(retries_) + " attempts");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
  }
  try {
    auto doc = nlohmann::json::parse(body);
    descriptor_.name = doc.at("name").get<std::string>();
    descriptor_.dimension = doc.at("dim").get<std::size_t>();
    descriptor_.max_tokens = doc.at("max_tokens").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Backend, std::string("sidecar /info: bad response: ") + e.what());
  }
  if (descriptor_.dimension == 0 || descriptor_.max_tokens == 0) {
    fail(ErrorKind::Backend, "sidecar /info reports a zero dimension or token limit");
  }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::post(const std::string& path, const std::string& body) {
  std::string last_error;
  for (int attempt = 0; attempt < retries_; ++attempt) {
    {
      std::lock_guard lock(impl_->mutex);
      auto res = impl_->client.Post(path, body, "application/json");
      if (res && res->status == 200) return res->body;
      if (res && res->status >= 400 && res->status < 500) {
        fail(ErrorKind::Backend, "sidecar " + path + " rejected request (HTTP " +
                                     std::to_string(res->status) + "): " + res->body);
      }
      last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
  }
  fail(ErrorKind::Backend, "sidecar " + path + " failed after " + std::to_string(retries_) +
                               " attempts: " + last_error);
}

std::vector<Embedding> HttpBackend::do_embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t first = 0; first < texts.size(); first += kMaxBatch) {
    const auto chunk = texts.subspan(first, std::min(kMaxBatch, texts.size() - first));
    nlohmann::json req;
    req["texts"] = std::vector<std::string>(chunk.begin(), chunk.end());
    try {
      auto doc = nlohmann::json::parse(post("/embed", req.dump()));
      const auto& rows = doc.at("embeddings");
      if (rows.size() != chunk.size()) {
        fail(ErrorKind::Backend, "sidecar /embed returned " + std::to_string(rows.size()) +
                                     " rows for " + std::to_string(chunk.size()) + " texts");
      }
      for (const auto& row : rows) {
        Embedding v;
        v.reserve(row.size());
        for (const auto& x : row) v.push_back(static_cast<double>(x.get<float>()));
        if (v.size() != descriptor_.dimension) {
          fail(ErrorKind::Backend, "sidecar /embed returned dimension " + std::to_string(v.size()) +
                                       ", /info declared " + std::to_string(descriptor_.dimension));
        }
        out.push_back(std::move(v));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Backend, std::string("sidecar /embed: bad response: ") + e.what());
    }
  }
  return out;
}

std::vector<std::size_t> HttpBackend::count_tokens(std::span<const std::string> texts) {
  std::vector<std::size_t> out;
  out.reserve(texts.size());
  for (std::size_t first = 0; first < texts.size(); first += kMaxBatch) {
    const auto chunk = texts.subspan(first, std::min(kMaxBatch, texts.size() - first));
    nlohmann::json req;
    req["texts"] = std::vector<std::string>(chunk.begin(), chunk.end());
    try {
      auto doc = nlohmann::json::parse(post("/tokenize", req.dump()));
      const auto& counts = doc.at("counts");
      if (counts.size() != chunk.size()) {
        fail(ErrorKind::Backend, "sidecar /tokenize returned the wrong number of counts");
      }
      for (const auto& c : counts) out.push_back(c.get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Backend, std::string("sidecar /tokenize: bad response: ") + e.what());
    }
  }
  return out;
}

}  // namespace tpot
