#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace veritrace {

/// Doubt and fake phrase lists. Phrases are lowercase word sequences joined
/// by single spaces.
struct TraceLexicon {
  std::vector<std::string> doubt_phrases;
  std::vector<std::string> fake_phrases;
  bool question_mark_is_doubt = true;

  /// The shipped doubt.lex / fake.lex, compiled in.
  static TraceLexicon defaults();
  static TraceLexicon load(const std::filesystem::path& doubt_file,
                           const std::filesystem::path& fake_file);
};

/// Parses a lexicon file: one phrase per line, `#` starts a comment line.
/// Phrases are lowercased and whitespace-collapsed; a phrase whose words are
/// not plain word tokens throws InputError.
std::vector<std::string> read_lexicon(std::istream& in);
std::vector<std::string> load_lexicon(const std::filesystem::path& path);

/// Case-folded word tokens: maximal runs of ASCII letters/digits and non-ASCII
/// bytes. This is the token boundary used by phrase matching.
std::vector<std::string> word_tokens(std::string_view text);

struct TraceResult {
  int db = 0;
  int uns = 0;
  std::vector<std::string> matched_phrases;  // in order of first occurrence; "?" included
};

/// Lexicon compiled into a token trie. Immutable and thread-safe.
class TraceMatcher {
 public:
  explicit TraceMatcher(TraceLexicon lexicon);

  /// Runs on raw text, before any preprocessing strips the question marks.
  TraceResult detect(std::string_view text) const;
  const TraceLexicon& lexicon() const { return lexicon_; }

 private:
  enum Kind : std::uint8_t { kDoubt = 1, kFake = 2 };
  struct Node {
    std::map<std::string, std::size_t, std::less<>> next;
    std::uint8_t kinds = 0;
    std::string phrase;
  };
  void insert(const std::string& phrase, Kind kind);

  TraceLexicon lexicon_;
  std::vector<Node> nodes_;
};

TraceResult detect(std::string_view text, const TraceLexicon& lexicon);

enum class UncertaintyMode { sum, saturating_or };

/// db + uns (or db | uns). Throws std::invalid_argument for inputs outside {0,1}.
int uncertainty_score(int db, int uns, UncertaintyMode mode = UncertaintyMode::sum);

}  // namespace veritrace
