#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "veritrace/evidence.hpp"

namespace veritrace {

/// What is sent to an engine: a public URL, raw bytes, or neither (replay
/// fixtures keyed by image id).
struct ImageQuery {
  std::string image_id;
  std::string url;
  std::string bytes;
};

class SearchError : public std::runtime_error {
 public:
  enum class Kind { network, quota, not_recorded, bad_response };

  SearchError(Engine engine, Kind kind, const std::string& cause);

  Engine engine() const { return engine_; }
  Kind kind() const { return kind_; }
  bool retryable() const { return kind_ == Kind::network; }

 private:
  Engine engine_;
  Kind kind_;
};

/// Returns raw titles in engine rank order. Normalization happens in
/// fetch_live().
class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual Engine engine() const = 0;
  virtual std::vector<std::string> search_titles(const ImageQuery& image) = 0;
};

/// Extracts titles from an engine response body.
///   bing_visual:   tags[].actions[] (VisualSearch / PagesIncluding) data.value[].name
///   google_images: items[].title
///   fixture:       {"titles": [...]}
std::vector<std::string> parse_engine_response(Engine engine, std::string_view body);

/// Serves canned response bodies from `<dir>/<sha256(request_key)>.json`.
/// Never touches the network.
class ReplayClient final : public SearchClient {
 public:
  ReplayClient(Engine engine, std::filesystem::path dir);

  Engine engine() const override { return engine_; }
  std::vector<std::string> search_titles(const ImageQuery& image) override;

  /// "<engine>\n" followed by the URL, "sha256:<hex of bytes>", or "id:<image_id>".
  static std::string request_key(Engine engine, const ImageQuery& image);
  static std::string request_hash(Engine engine, const ImageQuery& image);

  std::size_t calls() const { return calls_; }

 private:
  Engine engine_;
  std::filesystem::path dir_;
  std::size_t calls_ = 0;
};

/// Token bucket shared by all calls through one live client.
class TokenBucket {
 public:
  TokenBucket(double rate_per_second, double burst);
  /// Blocks until a token is available.
  void acquire();
  /// Non-blocking variant against an explicit clock reading (seconds).
  bool try_acquire(double now_seconds);

 private:
  void refill(double now_seconds);

  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  double last_ = -1.0;
};

struct LiveClientOptions {
  double requests_per_second = 1.0;
  std::string endpoint;  // empty: engine default
  std::chrono::seconds timeout{30};
};

inline constexpr const char* kBingKeyEnv = "VERITRACE_BING_KEY";
inline constexpr const char* kGoogleKeyEnv = "VERITRACE_GOOGLE_KEY";

/// Live HTTPS adapter for bing_visual or google_images. Throws InputError
/// naming the environment variable when the credential is not set, and when
/// the binary was built without VERITRACE_WITH_LIVE_SEARCH.
std::unique_ptr<SearchClient> make_live_client(Engine engine, const LiveClientOptions& options);

struct FetchOptions {
  std::chrono::seconds ttl = std::chrono::hours(24 * 30);
  int max_attempts = 1;
  Timestamp now = std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::now());
};

/// Serves a record younger than the TTL from the store; otherwise queries the
/// client (retrying network failures up to max_attempts), normalizes the
/// titles and writes the record through to the store. Zero results yield a
/// valid empty record.
EvidenceRecord fetch_live(SearchClient& client, EvidenceStore& store, const ImageQuery& image,
                          const FetchOptions& options = {});

}  // namespace veritrace
