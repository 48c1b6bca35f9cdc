#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace veritrace {

/// Lowercase tokens with no whitespace and no empty entries.
struct TokenStream {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  std::string joined() const;
  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

using StopWords = std::unordered_set<std::string>;

/// The shipped list (data/stopwords.txt), compiled in.
const StopWords& default_stopwords();
StopWords read_stopwords(std::istream& in);
StopWords load_stopwords(const std::filesystem::path& path);

/// One pass of the Porter (1980) suffix stripper over a lowercase ASCII word.
std::string porter_stem(std::string_view word);

/// Porter applied until the word stops changing, so that stemming a stem is a
/// no-op. Tokens that are not purely a-z are returned unchanged.
std::string stem(std::string_view word);

/// Lowercase, drop URL tokens, strip punctuation, split on whitespace, drop
/// stop-words, stem. Stems that collapse onto a stop-word are dropped too.
TokenStream normalize(std::string_view text);
TokenStream normalize(std::string_view text, const StopWords& stopwords);

using TokenId = std::int32_t;

/// Dense token ids. 0 and 1 are reserved for padding and unknown tokens.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();

  TokenId id_of(std::string_view token) const;
  const std::string& token_of(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  int min_freq() const { return min_freq_; }
  std::size_t max_len() const { return max_len_; }

  /// TSV: a `#vocab` metadata row, then `token\tid` rows in id order.
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Vocab read(std::istream& in);
  static Vocab load(const std::filesystem::path& path);

  /// SHA-256 of the serialized form; neural model files pin it.
  std::string content_hash() const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.min_freq_ == b.min_freq_ && a.max_len_ == b.max_len_;
  }

 private:
  friend Vocab build_vocab(std::span<const TokenStream>, int, std::size_t);
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  int min_freq_ = 1;
  std::size_t max_len_ = 50;
};

inline constexpr std::size_t kDefaultMaxLen = 50;

/// Indexes every token seen at least `min_freq` times. Ids follow descending
/// frequency, ties broken lexicographically. `max_len` is recorded as
/// metadata for encode().
Vocab build_vocab(std::span<const TokenStream> streams, int min_freq = 1,
                  std::size_t max_len = kDefaultMaxLen);

/// Exactly `max_len` ids: unknown tokens map to UNK, long streams are cut at
/// the tail, short ones right-padded with PAD. Throws std::invalid_argument if
/// max_len < 1.
std::vector<TokenId> encode(const TokenStream& stream, const Vocab& vocab, std::size_t max_len);

}  // namespace veritrace
