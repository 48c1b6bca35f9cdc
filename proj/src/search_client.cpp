#include <chrono>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "veritrace/hashing.hpp"
#include "veritrace/search_client.hpp"

namespace veritrace {

using nlohmann::json;

namespace {

std::string describe(Engine engine, SearchError::Kind kind, const std::string& cause) {
  const char* what = "network failure";
  switch (kind) {
    case SearchError::Kind::network: what = "network failure"; break;
    case SearchError::Kind::quota: what = "quota exceeded"; break;
    case SearchError::Kind::not_recorded: what = "no recorded response"; break;
    case SearchError::Kind::bad_response: what = "unparseable response"; break;
  }
  return std::string(to_string(engine)) + ": " + what + ": " + cause;
}

void collect_bing(const json& j, std::vector<std::string>& out) {
  if (!j.contains("tags") || !j["tags"].is_array()) return;
  for (const auto& tag : j["tags"]) {
    if (!tag.contains("actions") || !tag["actions"].is_array()) continue;
    for (const auto& action : tag["actions"]) {
      const auto type = action.value("actionType", std::string());
      if (type != "VisualSearch" && type != "PagesIncluding") continue;
      if (!action.contains("data") || !action["data"].contains("value")) continue;
      for (const auto& v : action["data"]["value"]) {
        if (v.contains("name") && v["name"].is_string()) out.push_back(v["name"].get<std::string>());
      }
    }
  }
}

}  // namespace

SearchError::SearchError(Engine engine, Kind kind, const std::string& cause)
    : std::runtime_error(describe(engine, kind, cause)), engine_(engine), kind_(kind) {}

std::vector<std::string> parse_engine_response(Engine engine, std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw SearchError(engine, SearchError::Kind::bad_response, e.what());
  }
  std::vector<std::string> titles;
  try {
    switch (engine) {
      case Engine::bing_visual:
        collect_bing(j, titles);
        break;
      case Engine::google_images:
        if (j.contains("items")) {
          for (const auto& item : j["items"]) {
            if (item.contains("title")) titles.push_back(item["title"].get<std::string>());
          }
        }
        break;
      case Engine::fixture:
        titles = j.at("titles").get<std::vector<std::string>>();
        break;
    }
  } catch (const json::exception& e) {
    throw SearchError(engine, SearchError::Kind::bad_response, e.what());
  }
  return titles;
}

ReplayClient::ReplayClient(Engine engine, std::filesystem::path dir)
    : engine_(engine), dir_(std::move(dir)) {}

std::string ReplayClient::request_key(Engine engine, const ImageQuery& image) {
  std::string key(to_string(engine));
  key += '\n';
  if (!image.url.empty()) {
    key += image.url;
  } else if (!image.bytes.empty()) {
    key += "sha256:" + sha256_hex(image.bytes);
  } else {
    key += "id:" + image.image_id;
  }
  return key;
}

std::string ReplayClient::request_hash(Engine engine, const ImageQuery& image) {
  return sha256_hex(request_key(engine, image));
}

std::vector<std::string> ReplayClient::search_titles(const ImageQuery& image) {
  ++calls_;
  const auto path = dir_ / (request_hash(engine_, image) + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SearchError(engine_, SearchError::Kind::not_recorded,
                      "image '" + image.image_id + "' (" + path.string() + ")");
  }
  std::ostringstream body;
  body << in.rdbuf();
  return parse_engine_response(engine_, body.str());
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(burst), tokens_(burst) {
  if (rate_per_second <= 0.0 || burst < 1.0) {
    throw std::invalid_argument("token bucket needs rate > 0 and burst >= 1");
  }
}

void TokenBucket::refill(double now) {
  if (last_ >= 0.0 && now > last_) tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
  if (now > last_) last_ = now;
}

bool TokenBucket::try_acquire(double now_seconds) {
  std::scoped_lock lock(mutex_);
  refill(now_seconds);
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

void TokenBucket::acquire() {
  using clock = std::chrono::steady_clock;
  for (;;) {
    const double now =
        std::chrono::duration<double>(clock::now().time_since_epoch()).count();
    double wait = 0.0;
    {
      std::scoped_lock lock(mutex_);
      refill(now);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = (1.0 - tokens_) / rate_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }
}

EvidenceRecord fetch_live(SearchClient& client, EvidenceStore& store, const ImageQuery& image,
                          const FetchOptions& options) {
  const Engine engine = client.engine();
  if (auto cached = store.find(image.image_id, engine)) {
    if (options.now - cached->retrieved_at < options.ttl) return *cached;
  }
  std::vector<std::string> raw;
  for (int attempt = 1;; ++attempt) {
    try {
      raw = client.search_titles(image);
      break;
    } catch (const SearchError& e) {
      if (!e.retryable() || attempt >= options.max_attempts) throw;
    }
  }
  EvidenceRecord record;
  record.image_id = image.image_id;
  record.engine = engine;
  record.titles = normalize_titles(raw);
  record.retrieved_at = options.now;
  store.upsert(record);
  return record;
}

}  // namespace veritrace
