#include "veritrace/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "embedded_data.hpp"
#include "veritrace/errors.hpp"
#include "veritrace/hashing.hpp"
#include "veritrace/strings.hpp"

namespace veritrace {

std::string TokenStream::joined() const { return strings::join(tokens, " "); }

StopWords read_stopwords(std::istream& in) {
  StopWords words;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = strings::trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.insert(strings::to_lower_ascii(t));
  }
  return words;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read stop-word list: " + path.string());
  return read_stopwords(in);
}

const StopWords& default_stopwords() {
  static const StopWords words = [] {
    std::istringstream in(embedded::kStopwords);
    return read_stopwords(in);
  }();
  return words;
}

namespace {

bool is_url_token(std::string_view token) {
  while (!token.empty() && !std::isalnum(static_cast<unsigned char>(token.front())) &&
         static_cast<unsigned char>(token.front()) < 0x80) {
    token.remove_prefix(1);
  }
  return token.starts_with("http://") || token.starts_with("https://") ||
         token.starts_with("www.");
}

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
         (c >= 0x7b && c <= 0x7e);
}

// ASCII punctuation, U+00A0..U+00BF (nbsp, guillemets, inverted marks) and the
// U+2000..U+206F general punctuation block become spaces.
std::string strip_punctuation(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_ascii_punct(c)) {
      out += ' ';
    } else if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) >= 0xA0 &&
               static_cast<unsigned char>(s[i + 1]) <= 0xBF) {
      out += ' ';
      i += 1;
    } else if (c == 0xE2 && i + 2 < s.size() &&
               (static_cast<unsigned char>(s[i + 1]) == 0x80 ||
                static_cast<unsigned char>(s[i + 1]) == 0x81)) {
      out += ' ';
      i += 2;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

}  // namespace

TokenStream normalize(std::string_view text) { return normalize(text, default_stopwords()); }

TokenStream normalize(std::string_view text, const StopWords& stopwords) {
  const auto lowered = strings::to_lower_ascii(text);
  std::vector<std::string> kept;
  for (auto& token : strings::split_whitespace(lowered)) {
    if (!is_url_token(token)) kept.push_back(std::move(token));
  }
  const auto stripped = strip_punctuation(strings::join(kept, " "));
  TokenStream out;
  for (auto& token : strings::split_whitespace(stripped)) {
    if (stopwords.count(token)) continue;
    auto stemmed = stem(token);
    if (stemmed.empty() || stopwords.count(stemmed)) continue;
    out.tokens.push_back(std::move(stemmed));
  }
  return out;
}

Vocab::Vocab() {
  push(std::string(kPadToken));
  push(std::string(kUnkToken));
}

void Vocab::push(std::string token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

TokenId Vocab::id_of(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

void Vocab::write(std::ostream& out) const {
  out << "#vocab\tsize=" << tokens_.size() << "\tmin_freq=" << min_freq_
      << "\tmax_len=" << max_len_ << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocab file: " + path.string());
  write(out);
}

Vocab Vocab::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("#vocab")) {
    throw InputError("vocab file: missing #vocab header");
  }
  std::size_t size = 0;
  Vocab v;
  for (const auto& field : strings::split(line, '\t')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const auto key = field.substr(0, eq);
    const auto value = std::string_view(field).substr(eq + 1);
    if (key == "size") size = static_cast<std::size_t>(strings::parse_int(value, "vocab size"));
    if (key == "min_freq") v.min_freq_ = static_cast<int>(strings::parse_int(value, "min_freq"));
    if (key == "max_len") v.max_len_ = static_cast<std::size_t>(strings::parse_int(value, "max_len"));
  }
  v.tokens_.clear();
  v.ids_.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = strings::split(line, '\t');
    if (cells.size() != 2) throw InputError("vocab file: malformed row '" + line + "'");
    const auto id = strings::parse_int(cells[1], "vocab id");
    if (id != static_cast<long long>(v.tokens_.size())) {
      throw InputError("vocab file: ids must be dense and ordered");
    }
    v.push(cells[0]);
  }
  if (v.tokens_.size() != size) throw InputError("vocab file: size header does not match rows");
  if (v.tokens_.size() < 2 || v.tokens_[0] != kPadToken || v.tokens_[1] != kUnkToken) {
    throw InputError("vocab file: reserved PAD/UNK entries missing");
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read vocab file: " + path.string());
  return read(in);
}

std::string Vocab::content_hash() const {
  std::ostringstream os;
  write(os);
  return sha256_hex(os.str());
}

Vocab build_vocab(std::span<const TokenStream> streams, int min_freq, std::size_t max_len) {
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& s : streams) {
    for (const auto& t : s.tokens) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : freq) {
    if (n >= static_cast<std::size_t>(min_freq) && token != Vocab::kPadToken &&
        token != Vocab::kUnkToken) {
      ranked.emplace_back(token, n);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  v.min_freq_ = min_freq;
  v.max_len_ = max_len;
  for (auto& [token, n] : ranked) v.push(token);
  return v;
}

std::vector<TokenId> encode(const TokenStream& stream, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  std::vector<TokenId> ids(max_len, Vocab::kPad);
  const std::size_t n = std::min(max_len, stream.tokens.size());
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id_of(stream.tokens[i]);
  return ids;
}

}  // namespace veritrace
