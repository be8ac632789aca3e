// Copyright 2026 The Keycap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP captioner client: POST {endpoint}/v1/caption with the frame as a PNG
// body; the reply is {"caption", "confidence"?, "model_id"?} on 200 and
// {"error"} on a status >= 400.

#include <httplib.h>

#include <json.hpp>

#include "backends.h"
#include "keycap/image_io.h"

namespace keycap::internal {
namespace {

using json = nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0) throw std::invalid_argument("only http:// captioner URLs are supported: " + url);
  auto path_at = url.find('/', 7);
  Endpoint ep;
  ep.origin = url.substr(0, path_at);
  ep.prefix = path_at == std::string::npos ? "" : url.substr(path_at);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

class HttpBackend : public CaptionBackend {
 public:
  explicit HttpBackend(const CaptionerConfig& config) : config_(config), endpoint_(split_url(config.endpoint)) {}

  std::string name() const override { return "http"; }
  std::string model_id() const override { return "http:" + config_.endpoint; }

  Caption caption(const Frame& frame) override {
    std::string body;
    try {
      auto png = encode_png(frame.width, frame.height, frame.pixels);
      body.assign(png.begin(), png.end());
    } catch (const std::exception& e) {
      throw CaptionError(name(), frame.index, e.what());
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      // httplib::Client is not shareable across threads; one per exchange.
      httplib::Client client(endpoint_.origin);
      auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(config_.timeout_s));
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      auto res = client.Post(endpoint_.prefix + "/v1/caption", body, "image/png");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return parse_success(res->body, frame.index);
      std::string detail = error_detail(res->body);
      if (res->status >= 500) {
        last_error = "server error " + std::to_string(res->status) + ": " + detail;
        continue;
      }
      throw CaptionError(name(), frame.index, "request rejected with status " + std::to_string(res->status) + ": " + detail);
    }
    throw CaptionError(name(), frame.index,
                       "transport failure after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
  }

 private:
  static std::string error_detail(const std::string& body) {
    try {
      json doc = json::parse(body);
      if (doc.is_object() && doc.contains("error") && doc["error"].is_string()) return doc["error"].get<std::string>();
    } catch (const json::exception&) {
    }
    return body.empty() ? "(empty body)" : body.substr(0, 200);
  }

  Caption parse_success(const std::string& body, std::size_t frame_index) const {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::exception&) {
      throw CaptionError(name(), frame_index, "malformed response: body is not JSON");
    }
    if (!doc.is_object() || !doc.contains("caption") || !doc["caption"].is_string()) {
      throw CaptionError(name(), frame_index, "malformed response: missing caption string");
    }
    Caption c;
    c.text = doc["caption"].get<std::string>();
    if (doc.contains("confidence") && !doc["confidence"].is_null()) {
      if (!doc["confidence"].is_number()) {
        throw CaptionError(name(), frame_index, "malformed response: confidence is not a number");
      }
      c.confidence = doc["confidence"].get<double>();
    }
    c.model_id = doc.contains("model_id") && doc["model_id"].is_string() ? doc["model_id"].get<std::string>()
                                                                          : model_id();
    validate_caption(c, name(), frame_index);
    return c;
  }

  CaptionerConfig config_;
  Endpoint endpoint_;
};

}  // namespace

std::unique_ptr<CaptionBackend> make_http_backend(const CaptionerConfig& config) {
  return std::make_unique<HttpBackend>(config);
}

}  // namespace keycap::internal
