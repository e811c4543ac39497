#include "dialkg/tagger.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

#include "dialkg/text.hpp"

namespace dialkg::tagger {

namespace {

const std::map<std::string, std::string, std::less<>>& type_nouns() {
  static const std::map<std::string, std::string, std::less<>> t = {
      {"api", "API"},
      {"component", "Component"},
      {"company", "Organization"},
      {"engineer", "Person"},
      {"entrepreneur", "Person"},
      {"feature", "Feature"},
      {"foundation", "Organization"},
      {"framework", "Framework"},
      {"language", "Language"},
      {"library", "Library"},
      {"organization", "Organization"},
      {"person", "Person"},
      {"platform", "Platform"},
      {"product", "Product"},
      {"project", "Project"},
      {"resource", "Resource"},
      {"service", "Service"},
      {"tool", "Tool"},
      {"vendor", "Organization"},
  };
  return t;
}

// Type nouns that may trail a proper name inside a capitalized run.
bool strippable_suffix(std::string_view lower_word) {
  static const std::set<std::string, std::less<>> s = {
      "api", "component", "feature", "framework", "library", "platform", "project", "resource",
      "service", "tool"};
  return s.contains(lower_word);
}

bool is_month(std::string_view w) {
  static const std::set<std::string, std::less<>> months = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  return months.contains(text::lower(w));
}

bool is_day(std::string_view w) {
  if (w.empty() || w.size() > 2) return false;
  if (!std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) return false;
  int d = std::stoi(std::string(w));
  return d >= 1 && d <= 31;
}

bool is_iso_date(std::string_view w) {
  if (w.size() != 7 && w.size() != 10) return false;
  return text::is_year(w.substr(0, 4)) && w[4] == '-';
}

bool small_integer(std::string_view w) {
  return !w.empty() && w.size() <= 3 &&
         std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string substr(std::string_view s, std::size_t b, std::size_t e) {
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::optional<std::string> type_noun(std::string_view word) {
  const auto& t = type_nouns();
  if (auto it = t.find(text::lower(word)); it != t.end()) return it->second;
  return std::nullopt;
}

bool is_function_word(std::string_view word) {
  static const std::set<std::string, std::less<>> fw = {
      "a",    "after", "an",  "and",  "as",   "at",    "before", "by",    "during", "for",
      "from", "he",    "her", "his",  "in",   "it",    "its",    "on",    "our",    "she",
      "since", "that", "the", "their", "these", "they", "this",  "those", "until",  "we",
      "when", "while", "with"};
  return fw.contains(text::lower(word));
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::string_view strip_tail = ".,;:!?\"')";
  const std::string_view strip_head = "\"'(";
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t e = i;
    bool comma = false;
    while (e > b && strip_tail.find(s[e - 1]) != std::string_view::npos) {
      if (s[e - 1] == ',' || s[e - 1] == ';') comma = true;
      --e;
    }
    while (b < e && strip_head.find(s[b]) != std::string_view::npos) ++b;
    if (b == e) {
      if (comma && !out.empty()) out.back().comma_after = true;
      continue;
    }
    out.push_back(Token{substr(s, b, e), b, e, comma});
  }
  return out;
}

std::vector<DateSpan> find_dates(std::string_view s, const std::vector<Token>& t) {
  std::vector<DateSpan> out;
  auto emit = [&](std::size_t first, std::size_t last) {
    out.push_back(DateSpan{{first, last}, substr(s, t[first].begin, t[last - 1].end)});
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (is_month(t[i].text)) {
      if (i + 2 < t.size() && is_day(t[i + 1].text) && text::is_year(t[i + 2].text)) {
        emit(i, i + 3);
        i += 2;
        continue;
      }
      if (i + 1 < t.size() && text::is_year(t[i + 1].text)) {
        emit(i, i + 2);
        i += 1;
        continue;
      }
    }
    if (text::is_year(t[i].text) || is_iso_date(t[i].text)) emit(i, i + 1);
  }
  return out;
}

std::vector<MentionPhrase> mentions(std::string_view s, const std::vector<Token>& t, std::size_t from,
                                    std::size_t to) {
  std::vector<bool> masked(t.size(), false);
  for (const auto& d : find_dates(s, t)) {
    for (std::size_t i = d.tokens.first; i < d.tokens.last; ++i) masked[i] = true;
  }
  // A lone capital letter ("A acquires B") names an entity when a verb or a
  // relation token follows it rather than a noun.
  auto letter_name = [&](std::size_t i) {
    if (t[i].text.size() != 1 || !text::starts_upper(t[i].text) || i + 1 >= t.size()) return false;
    const std::string next = text::lower(t[i + 1].text);
    if (next != t[i + 1].text) return false;
    return text::lemmatize(next) != next || next.find('_') != std::string::npos || next == "is" || next == "was";
  };
  auto starts_run = [&](std::size_t i) {
    if (masked[i] || !text::starts_upper(t[i].text)) return false;
    return !is_function_word(t[i].text) || letter_name(i);
  };
  auto continues_run = [&](std::size_t i) {
    if (masked[i]) return false;
    if (small_integer(t[i].text)) return true;
    return text::starts_upper(t[i].text) && !is_function_word(t[i].text);
  };

  std::vector<MentionPhrase> out;
  to = std::min(to, t.size());
  std::size_t i = from;
  while (i < to) {
    if (!starts_run(i)) {
      ++i;
      continue;
    }
    std::size_t b = i;
    std::size_t e = i + 1;
    while (e < to && !t[e - 1].comma_after && continues_run(e)) ++e;
    i = e;

    MentionPhrase m;
    if (b > 0) {
      const auto& prev = t[b - 1].text;
      if (!text::starts_upper(prev)) {
        if (auto ty = type_noun(prev)) m.type_hint = *ty;
      }
    }
    if (e - b > 1 && strippable_suffix(text::lower(t[e - 1].text))) {
      if (auto ty = type_noun(t[e - 1].text)) m.type_hint = *ty;
      --e;
    }
    m.tokens = {b, e};
    m.begin = t[b].begin;
    m.end = t[e - 1].end;
    m.text = substr(s, m.begin, m.end);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MentionPhrase> mentions(std::string_view s) {
  auto toks = tokenize(s);
  return mentions(s, toks, 0, toks.size());
}

std::optional<MentionPhrase> phrase(std::string_view s, const std::vector<Token>& t, std::size_t from,
                                    std::size_t to) {
  to = std::min(to, t.size());
  std::size_t b = from;
  std::size_t e = to;
  std::string hint;
  while (b < e) {
    const std::string w = text::lower(t[b].text);
    if ((w == "the" || w == "a" || w == "an") && b + 1 < e) {
      ++b;
    } else {
      break;
    }
  }
  if (b >= e) return std::nullopt;
  if (e - b > 1 && !text::starts_upper(t[b].text)) {
    if (auto ty = type_noun(t[b].text)) {
      hint = *ty;
      ++b;
    }
  }
  if (e - b > 1 && text::starts_upper(t[b].text) && strippable_suffix(text::lower(t[e - 1].text))) {
    if (auto ty = type_noun(t[e - 1].text)) {
      hint = *ty;
      --e;
    }
  }
  MentionPhrase m;
  m.tokens = {b, e};
  m.begin = t[b].begin;
  m.end = t[e - 1].end;
  m.text = substr(s, m.begin, m.end);
  m.type_hint = hint;
  return m;
}

}  // namespace dialkg::tagger
