// HTTPS adapters for the live engines. Not exercised by the test suite; the
// replay client covers response parsing.

#include <cstdlib>
#include <string>

#include "veritrace/search_client.hpp"

#ifdef VERITRACE_WITH_LIVE_SEARCH
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#endif

namespace veritrace {

namespace {

std::string require_env(const char* name, Engine engine) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') {
    throw InputError("live " + std::string(to_string(engine)) + " search needs credentials: set " +
                     name);
  }
  return value;
}

#ifdef VERITRACE_WITH_LIVE_SEARCH

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

void check_status(Engine engine, const httplib::Result& res) {
  if (!res) {
    throw SearchError(engine, SearchError::Kind::network, httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 200) return;
  const auto cause = "HTTP " + std::to_string(status);
  if (status == 429 || status == 403) throw SearchError(engine, SearchError::Kind::quota, cause);
  if (status >= 500) throw SearchError(engine, SearchError::Kind::network, cause);
  throw SearchError(engine, SearchError::Kind::bad_response, cause);
}

class BingVisualClient final : public SearchClient {
 public:
  BingVisualClient(std::string key, const LiveClientOptions& options)
      : key_(std::move(key)),
        endpoint_(split_endpoint(options.endpoint.empty()
                                     ? "https://api.bing.microsoft.com/v7.0/images/visualsearch"
                                     : options.endpoint)),
        timeout_(options.timeout),
        bucket_(options.requests_per_second, 1.0) {}

  Engine engine() const override { return Engine::bing_visual; }

  std::vector<std::string> search_titles(const ImageQuery& image) override {
    bucket_.acquire();
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    const httplib::Headers headers = {{"Ocp-Apim-Subscription-Key", key_}};
    httplib::MultipartFormDataItems items;
    if (!image.url.empty()) {
      items.push_back({"knowledgeRequest",
                       R"({"imageInfo":{"url":")" + image.url + R"("}})", "", "application/json"});
    } else {
      items.push_back({"image", image.bytes, "image", "application/octet-stream"});
    }
    auto res = client.Post(endpoint_.path, headers, items);
    check_status(engine(), res);
    return parse_engine_response(engine(), res->body);
  }

 private:
  std::string key_;
  Endpoint endpoint_;
  std::chrono::seconds timeout_;
  TokenBucket bucket_;
};

class GoogleImagesClient final : public SearchClient {
 public:
  GoogleImagesClient(std::string key, const LiveClientOptions& options)
      : key_(std::move(key)),
        endpoint_(split_endpoint(options.endpoint.empty()
                                     ? "https://www.googleapis.com/customsearch/v1"
                                     : options.endpoint)),
        timeout_(options.timeout),
        bucket_(options.requests_per_second, 1.0) {}

  Engine engine() const override { return Engine::google_images; }

  std::vector<std::string> search_titles(const ImageQuery& image) override {
    if (image.url.empty()) {
      throw SearchError(engine(), SearchError::Kind::bad_response,
                        "google_images adapter needs an image URL");
    }
    bucket_.acquire();
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Params params = {{"key", key_}, {"searchType", "image"}, {"q", image.url}};
    if (const char* cx = std::getenv("VERITRACE_GOOGLE_CX")) params.emplace("cx", cx);
    auto res = client.Get(endpoint_.path, params, httplib::Headers{});
    check_status(engine(), res);
    return parse_engine_response(engine(), res->body);
  }

 private:
  std::string key_;
  Endpoint endpoint_;
  std::chrono::seconds timeout_;
  TokenBucket bucket_;
};

#endif  // VERITRACE_WITH_LIVE_SEARCH

}  // namespace

std::unique_ptr<SearchClient> make_live_client(Engine engine, const LiveClientOptions& options) {
  if (engine == Engine::fixture) {
    throw InputError("the fixture engine has no live adapter; use replay mode");
  }
  const auto key = require_env(engine == Engine::bing_visual ? kBingKeyEnv : kGoogleKeyEnv, engine);
#ifdef VERITRACE_WITH_LIVE_SEARCH
  if (engine == Engine::bing_visual) return std::make_unique<BingVisualClient>(key, options);
  return std::make_unique<GoogleImagesClient>(key, options);
#else
  (void)options;
  (void)key;
  throw InputError("this build has no live search support (VERITRACE_WITH_LIVE_SEARCH=OFF)");
#endif
}

}  // namespace veritrace
