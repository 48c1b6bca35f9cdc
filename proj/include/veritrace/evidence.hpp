#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "veritrace/errors.hpp"

namespace veritrace {

enum class Engine { bing_visual, google_images, fixture };

std::string_view to_string(Engine engine);
Engine parse_engine(std::string_view s);

inline constexpr std::size_t kMaxTitles = 10;

using Timestamp = std::chrono::sys_seconds;

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(Timestamp t);
/// Accepts the format above, with optional fractional seconds and either a
/// trailing "Z" or a "+HH:MM"/"-HH:MM" offset. Throws InputError.
Timestamp parse_iso8601(std::string_view s);

/// Ranked titles retrieved for one image from one engine (rank 1 first).
struct EvidenceRecord {
  std::string image_id;
  Engine engine = Engine::fixture;
  std::vector<std::string> titles;
  Timestamp retrieved_at{};

  friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

std::string to_jsonl(const EvidenceRecord& record);
/// Throws InputError when the line is not a valid record (bad JSON, unknown
/// engine, more than 10 titles, an empty title, bad timestamp).
EvidenceRecord record_from_jsonl(std::string_view line);

/// At most one record per (image_id, engine). Reads may run concurrently;
/// writers take an exclusive lock.
class EvidenceStore {
 public:
  EvidenceStore() = default;
  EvidenceStore(const EvidenceStore& other);
  EvidenceStore& operator=(const EvidenceStore& other);

  void upsert(EvidenceRecord record);
  std::optional<EvidenceRecord> find(std::string_view image_id, Engine engine) const;
  std::size_t size() const;
  /// Snapshot ordered by (image_id, engine).
  std::vector<EvidenceRecord> records() const;

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

 private:
  using Key = std::pair<std::string, Engine>;
  mutable std::shared_mutex mutex_;
  std::map<Key, EvidenceRecord, std::less<>> records_;
};

struct ImportResult {
  std::size_t accepted = 0;
  std::vector<Diagnostic> diagnostics;
};

/// Upserts every valid JSONL line (last record wins per key). Malformed lines
/// are reported and skipped.
ImportResult import_records(EvidenceStore& store, std::istream& in);
ImportResult import_records(EvidenceStore& store, const std::filesystem::path& path);

/// Loads a store file; a missing file is a MissingArtifactError.
EvidenceStore load_store(const std::filesystem::path& path,
                         std::vector<Diagnostic>* diagnostics = nullptr);

/// First min(k, available) titles in rank order; empty when there is no
/// record. Throws std::invalid_argument unless 1 <= k <= 10.
std::vector<std::string> get_titles(const EvidenceStore& store, std::string_view image_id,
                                    Engine engine, std::size_t k);

/// Decodes HTML character references; unknown named entities are removed.
std::string decode_html_entities(std::string_view s);

/// Engine output to stored titles: decode entities, collapse whitespace, drop
/// titles shorter than 3 characters, drop case-insensitive duplicates (first
/// wins), keep at most 10.
std::vector<std::string> normalize_titles(std::span<const std::string> raw);

}  // namespace veritrace
