#include "veritrace/evidence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <json.hpp>
#include <stdexcept>
#include <unordered_set>

#include "veritrace/strings.hpp"

namespace veritrace {

using nlohmann::json;

std::string_view to_string(Engine engine) {
  switch (engine) {
    case Engine::bing_visual: return "bing_visual";
    case Engine::google_images: return "google_images";
    case Engine::fixture: return "fixture";
  }
  return "fixture";
}

Engine parse_engine(std::string_view s) {
  if (s == "bing_visual" || s == "bing") return Engine::bing_visual;
  if (s == "google_images" || s == "google") return Engine::google_images;
  if (s == "fixture") return Engine::fixture;
  throw InputError("unknown engine '" + std::string(s) + "'");
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  auto fail = [&]() -> Timestamp {
    throw InputError("invalid ISO-8601 timestamp '" + std::string(s) + "'");
  };
  auto digits = [&](std::size_t pos, std::size_t n) -> int {
    if (pos + n > s.size()) fail();
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9') fail();
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return fail();
  }
  const year_month_day ymd{year{digits(0, 4)}, month{static_cast<unsigned>(digits(5, 2))},
                           day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) return fail();
  const int hh = digits(11, 2), mm = digits(14, 2), ss = digits(17, 2);
  if (hh > 23 || mm > 59 || ss > 60) return fail();
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  seconds offset{0};
  if (pos < s.size() && s[pos] == 'Z') {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '+' ? 1 : -1;
    if (pos + 6 > s.size() || s[pos + 3] != ':') return fail();
    offset = sign * (hours{digits(pos + 1, 2)} + minutes{digits(pos + 4, 2)});
    pos += 6;
  } else {
    return fail();
  }
  if (pos != s.size()) return fail();
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - offset;
}

std::string to_jsonl(const EvidenceRecord& record) {
  json j;
  j["image_id"] = record.image_id;
  j["engine"] = to_string(record.engine);
  j["titles"] = record.titles;
  j["retrieved_at"] = format_iso8601(record.retrieved_at);
  return j.dump();
}

EvidenceRecord record_from_jsonl(std::string_view line) {
  EvidenceRecord r;
  try {
    const auto j = json::parse(line);
    r.image_id = j.at("image_id").get<std::string>();
    r.engine = parse_engine(j.at("engine").get<std::string>());
    r.titles = j.at("titles").get<std::vector<std::string>>();
    r.retrieved_at = parse_iso8601(j.at("retrieved_at").get<std::string>());
  } catch (const json::exception& e) {
    throw InputError(e.what());
  }
  if (r.image_id.empty()) throw InputError("empty image_id");
  if (r.titles.size() > kMaxTitles) {
    throw InputError("record has " + std::to_string(r.titles.size()) + " titles (max 10)");
  }
  for (const auto& t : r.titles) {
    if (t.empty()) throw InputError("record contains an empty title");
  }
  return r;
}

EvidenceStore::EvidenceStore(const EvidenceStore& other) {
  std::shared_lock lock(other.mutex_);
  records_ = other.records_;
}

EvidenceStore& EvidenceStore::operator=(const EvidenceStore& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_);
  std::shared_lock other_lock(other.mutex_);
  records_ = other.records_;
  return *this;
}

void EvidenceStore::upsert(EvidenceRecord record) {
  std::unique_lock lock(mutex_);
  Key key{record.image_id, record.engine};
  records_.insert_or_assign(std::move(key), std::move(record));
}

std::optional<EvidenceRecord> EvidenceStore::find(std::string_view image_id, Engine engine) const {
  std::shared_lock lock(mutex_);
  const auto it = records_.find(Key{std::string(image_id), engine});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::size_t EvidenceStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<EvidenceRecord> EvidenceStore::records() const {
  std::shared_lock lock(mutex_);
  std::vector<EvidenceRecord> out;
  out.reserve(records_.size());
  for (const auto& [key, record] : records_) out.push_back(record);
  return out;
}

void EvidenceStore::write(std::ostream& out) const {
  for (const auto& r : records()) out << to_jsonl(r) << '\n';
}

void EvidenceStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write evidence store: " + path.string());
  write(out);
}

ImportResult import_records(EvidenceStore& store, std::istream& in) {
  ImportResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strings::trim(line).empty()) continue;
    try {
      store.upsert(record_from_jsonl(line));
      ++result.accepted;
    } catch (const InputError& e) {
      result.diagnostics.push_back({line_no, e.what()});
    }
  }
  return result;
}

ImportResult import_records(EvidenceStore& store, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read evidence file: " + path.string());
  return import_records(store, in);
}

EvidenceStore load_store(const std::filesystem::path& path, std::vector<Diagnostic>* diagnostics) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("evidence store not found: " + path.string());
  }
  EvidenceStore store;
  auto result = import_records(store, path);
  if (diagnostics) *diagnostics = std::move(result.diagnostics);
  return store;
}

std::vector<std::string> get_titles(const EvidenceStore& store, std::string_view image_id,
                                    Engine engine, std::size_t k) {
  if (k < 1 || k > kMaxTitles) throw std::invalid_argument("k must be in [1, 10]");
  const auto record = store.find(image_id, engine);
  if (!record) return {};
  auto titles = record->titles;
  if (titles.size() > k) titles.resize(k);
  return titles;
}

namespace {

void append_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

std::string decode_html_entities(std::string_view s) {
  static const std::pair<std::string_view, std::string_view> kNamed[] = {
      {"amp", "&"},       {"lt", "<"},       {"gt", ">"},        {"quot", "\""},
      {"apos", "'"},      {"nbsp", " "},     {"ndash", "–"}, {"mdash", "—"},
      {"lsquo", "‘"}, {"rsquo", "’"}, {"ldquo", "“"}, {"rdquo", "”"},
      {"hellip", "…"}, {"copy", "©"}, {"reg", "®"},   {"trade", "™"},
  };
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += s[i++];
      continue;
    }
    const auto body = s.substr(i + 1, semi - i - 1);
    bool ok = !body.empty();
    if (ok && body[0] == '#') {
      unsigned long cp = 0;
      const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
      const auto digits = body.substr(hex ? 2 : 1);
      ok = !digits.empty();
      for (char c : digits) {
        int v = -1;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        if (v < 0) { ok = false; break; }
        cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(v);
        if (cp > 0x10FFFF) { ok = false; break; }
      }
      if (ok) append_utf8(out, cp);
    } else if (ok) {
      ok = std::all_of(body.begin(), body.end(),
                       [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                                           (c >= '0' && c <= '9'); });
      if (ok) {
        for (const auto& [name, text] : kNamed) {
          if (body == name) {
            out += text;
            break;
          }
        }
      }
    }
    if (!ok) {
      out += s[i++];
      continue;
    }
    i = semi + 1;
  }
  return out;
}

std::vector<std::string> normalize_titles(std::span<const std::string> raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : raw) {
    if (out.size() == kMaxTitles) break;
    auto title = strings::collapse_whitespace(decode_html_entities(r));
    if (utf8_length(title) < 3) continue;
    if (!seen.insert(strings::to_lower_ascii(title)).second) continue;
    out.push_back(std::move(title));
  }
  return out;
}

}  // namespace veritrace
