#include "veritrace/traces.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "embedded_data.hpp"
#include "veritrace/errors.hpp"
#include "veritrace/strings.hpp"

namespace veritrace {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::vector<std::string> parse_embedded(const char* text) {
  std::istringstream in(text);
  return read_lexicon(in);
}

}  // namespace

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(strings::to_lower_ascii(text.substr(start, i - start)));
  }
  return out;
}

std::vector<std::string> read_lexicon(std::istream& in) {
  std::vector<std::string> phrases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = strings::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto phrase = strings::collapse_whitespace(strings::to_lower_ascii(t));
    if (strings::join(word_tokens(phrase), " ") != phrase) {
      throw InputError("lexicon line " + std::to_string(line_no) + ": '" + phrase +
                       "' is not a plain word sequence");
    }
    if (std::find(phrases.begin(), phrases.end(), phrase) == phrases.end()) {
      phrases.push_back(std::move(phrase));
    }
  }
  return phrases;
}

std::vector<std::string> load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read lexicon file: " + path.string());
  return read_lexicon(in);
}

TraceLexicon TraceLexicon::defaults() {
  TraceLexicon lex;
  lex.doubt_phrases = parse_embedded(embedded::kDoubtLexicon);
  lex.fake_phrases = parse_embedded(embedded::kFakeLexicon);
  return lex;
}

TraceLexicon TraceLexicon::load(const std::filesystem::path& doubt_file,
                                const std::filesystem::path& fake_file) {
  TraceLexicon lex;
  lex.doubt_phrases = load_lexicon(doubt_file);
  lex.fake_phrases = load_lexicon(fake_file);
  return lex;
}

TraceMatcher::TraceMatcher(TraceLexicon lexicon) : lexicon_(std::move(lexicon)) {
  nodes_.emplace_back();
  for (const auto& p : lexicon_.doubt_phrases) insert(p, kDoubt);
  for (const auto& p : lexicon_.fake_phrases) insert(p, kFake);
}

void TraceMatcher::insert(const std::string& phrase, Kind kind) {
  const auto words = word_tokens(phrase);
  if (words.empty()) throw InputError("empty lexicon phrase");
  std::size_t node = 0;
  for (const auto& w : words) {
    auto it = nodes_[node].next.find(w);
    if (it == nodes_[node].next.end()) {
      nodes_.emplace_back();
      it = nodes_[node].next.emplace(w, nodes_.size() - 1).first;
    }
    node = it->second;
  }
  nodes_[node].kinds |= kind;
  nodes_[node].phrase = strings::join(words, " ");
}

TraceResult TraceMatcher::detect(std::string_view text) const {
  TraceResult result;
  auto note = [&](const std::string& phrase) {
    if (std::find(result.matched_phrases.begin(), result.matched_phrases.end(), phrase) ==
        result.matched_phrases.end()) {
      result.matched_phrases.push_back(phrase);
    }
  };
  const auto words = word_tokens(text);
  for (std::size_t start = 0; start < words.size(); ++start) {
    std::size_t node = 0;
    for (std::size_t i = start; i < words.size(); ++i) {
      const auto it = nodes_[node].next.find(words[i]);
      if (it == nodes_[node].next.end()) break;
      node = it->second;
      const auto kinds = nodes_[node].kinds;
      if (kinds == 0) continue;
      if (kinds & kDoubt) result.db = 1;
      if (kinds & kFake) result.uns = 1;
      note(nodes_[node].phrase);
    }
  }
  if (lexicon_.question_mark_is_doubt && text.find('?') != std::string_view::npos) {
    result.db = 1;
    note("?");
  }
  return result;
}

TraceResult detect(std::string_view text, const TraceLexicon& lexicon) {
  return TraceMatcher(lexicon).detect(text);
}

int uncertainty_score(int db, int uns, UncertaintyMode mode) {
  if ((db != 0 && db != 1) || (uns != 0 && uns != 1)) {
    throw std::invalid_argument("uncertainty_score expects db, uns in {0,1}");
  }
  return mode == UncertaintyMode::sum ? db + uns : (db | uns);
}

}  // namespace veritrace
