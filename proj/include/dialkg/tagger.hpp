#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Lightweight rule-based tagging over single sentences: tokenization with
// source offsets, date spotting and capitalized-run mention chunking.
namespace dialkg::tagger {

struct Token {
  std::string text;        // without trailing punctuation
  std::size_t begin = 0;   // offset in the sentence
  std::size_t end = 0;     // one past the last kept character
  bool comma_after = false;
};

std::vector<Token> tokenize(std::string_view sentence);

struct Span {
  std::size_t first = 0;  // token index
  std::size_t last = 0;   // one past
};

/// A date expression: "September 4, 1998", "March 2021", "2021-03-04", "2021".
struct DateSpan {
  Span tokens;
  std::string text;
};

std::vector<DateSpan> find_dates(std::string_view sentence, const std::vector<Token>& toks);

struct MentionPhrase {
  Span tokens;
  std::string text;       // exact substring of the sentence
  std::size_t begin = 0;  // offsets in the sentence
  std::size_t end = 0;
  std::string type_hint;  // from an adjacent type noun ("the company X", "X API")
};

/// Capitalized runs within [from, to), skipping sentence-initial function
/// words and date tokens. A lowercase type noun right before the run, or a
/// trailing capitalized one inside it, becomes the type hint.
std::vector<MentionPhrase> mentions(std::string_view sentence, const std::vector<Token>& toks,
                                    std::size_t from, std::size_t to);
std::vector<MentionPhrase> mentions(std::string_view sentence);

/// Interprets a token range as one noun phrase: drops determiners and a
/// leading type noun, strips a trailing type noun. Literal phrases are kept whole.
std::optional<MentionPhrase> phrase(std::string_view sentence, const std::vector<Token>& toks,
                                    std::size_t from, std::size_t to);

/// Type label for a type noun ("company" -> "Organization"), if it is one.
std::optional<std::string> type_noun(std::string_view word);

bool is_function_word(std::string_view word);

}  // namespace dialkg::tagger
