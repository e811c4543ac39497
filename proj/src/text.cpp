#include "dialkg/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "dialkg/common.hpp"

namespace dialkg::text {

namespace {

const std::unordered_map<std::string, std::string>& lemma_table() {
  static const std::unordered_map<std::string, std::string> table = [] {
    std::unordered_map<std::string, std::string> t;
    auto add = [&t](const std::string& lemma, std::initializer_list<const char*> forms) {
      t[lemma] = lemma;
      for (const char* f : forms) t[f] = lemma;
    };
    add("acquire", {"acquires", "acquired", "acquiring", "acquisition", "acquisitions"});
    add("announce", {"announces", "announced", "announcing", "announcement"});
    add("create", {"creates", "created", "creating", "creation"});
    add("deprecate", {"deprecates", "deprecated", "deprecating", "deprecation"});
    add("develop", {"develops", "developed", "developing", "development"});
    add("discontinue", {"discontinues", "discontinued", "discontinuing", "discontinuation"});
    add("found", {"founds", "founded", "founding", "foundation"});
    add("introduce", {"introduces", "introduced", "introducing", "introduction"});
    add("locate", {"locates", "located", "location"});
    add("maintain", {"maintains", "maintained", "maintaining", "maintenance"});
    add("merge", {"merges", "merged", "merging", "merger"});
    add("own", {"owns", "owned", "owning", "ownership"});
    add("release", {"releases", "released", "releasing"});
    add("remove", {"removes", "removed", "removing", "removal"});
    add("rename", {"renames", "renamed", "renaming"});
    add("replace", {"replaces", "replaced", "replacing", "replacement"});
    add("retire", {"retires", "retired", "retiring", "retirement"});
    add("succeed", {"succeeds", "succeeded", "succeeding", "succession"});
    add("sunset", {"sunsets", "sunsetted", "sunsetting"});
    add("use", {"uses", "used", "using", "usage"});
    add("eol", {"end-of-life"});
    return t;
  }();
  return table;
}

const std::unordered_set<std::string>& particles() {
  static const std::unordered_set<std::string> p = {
      "by", "of", "in", "on",  "at",  "to",   "for", "from", "with",  "the",
      "a",  "an", "is", "was", "are", "were", "has", "have", "had",   "be",
      "been"};
  return p;
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

bool starts_upper(std::string_view token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token[0]));
}

std::string slug(std::string_view s) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (pending_sep && !out.empty()) out += '_';
      out += static_cast<char>(std::tolower(c));
      pending_sep = false;
    } else {
      pending_sep = true;
    }
  }
  return out;
}

std::string lemmatize(std::string_view token) {
  std::string t = lower(token);
  const auto& table = lemma_table();
  if (auto it = table.find(t); it != table.end()) return it->second;
  return t;
}

std::string normalize_relation_label(std::string_view label) {
  std::string s = lower(trim(label));
  for (char& c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '-') c = '_';
  }
  // Collapse repeated underscores.
  std::string collapsed;
  for (char c : s) {
    if (c == '_' && !collapsed.empty() && collapsed.back() == '_') continue;
    collapsed += c;
  }
  while (!collapsed.empty() && collapsed.back() == '_') collapsed.pop_back();
  while (!collapsed.empty() && collapsed.front() == '_') collapsed.erase(collapsed.begin());

  auto toks = split(collapsed, '_');
  if (toks.empty() || toks[0].empty()) return collapsed;
  toks[0] = lemmatize(toks[0]);
  std::string out = toks[0];
  for (std::size_t i = 1; i < toks.size(); ++i) out += "_" + toks[i];
  return out;
}

std::string relation_key(std::string_view label) {
  const std::string norm = normalize_relation_label(label);
  std::string out;
  for (const auto& tok : split(norm, '_')) {
    if (tok.empty() || particles().contains(tok)) continue;
    if (!out.empty()) out += '_';
    out += lemmatize(tok);
  }
  return out.empty() ? norm : out;
}

bool is_year(std::string_view token) {
  if (token.size() != 4 || !all_digits(token)) return false;
  return token[0] == '1' || token[0] == '2';
}

bool is_version(std::string_view token) {
  std::string_view t = token;
  if (!t.empty() && (t[0] == 'v' || t[0] == 'V')) t.remove_prefix(1);
  if (t.empty() || !std::isdigit(static_cast<unsigned char>(t[0]))) return false;
  bool dot = false;
  for (char c : t) {
    if (c == '.') {
      dot = true;
    } else if (!std::isdigit(static_cast<unsigned char>(c))) {
      return false;
    }
  }
  return dot || token.size() != t.size();
}

bool is_number(std::string_view token) {
  std::string_view t = token;
  if (!t.empty() && (t[0] == '$' || t[0] == '-')) t.remove_prefix(1);
  if (t.empty()) return false;
  bool digit = false;
  for (char c : t) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '%') {
      return false;
    }
  }
  return digit;
}

bool is_literal_like(std::string_view mention) {
  const std::string m = trim(mention);
  if (m.empty()) return true;
  if (is_year(m) || is_version(m) || is_number(m)) return true;
  if (TimeInterval::parse(m)) return true;
  return std::none_of(m.begin(), m.end(), [](unsigned char c) { return std::isupper(c); });
}

}  // namespace dialkg::text
