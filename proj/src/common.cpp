#include "dialkg/common.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "dialkg/text.hpp"

namespace dialkg {

namespace {

using namespace std::chrono;

constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<unsigned> month_from_name(std::string_view name) {
  const std::string n = text::lower(name);
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (n == kMonths[i] || (n.size() >= 3 && kMonths[i].substr(0, 3) == n)) {
      return static_cast<unsigned>(i + 1);
    }
  }
  return std::nullopt;
}

std::optional<TimeInterval> whole_year(int y) {
  if (y < 1 || y > 9999) return std::nullopt;
  return TimeInterval{sys_days{year{y} / January / 1}, sys_days{year{y} / December / 31}};
}

std::optional<TimeInterval> whole_month(int y, unsigned m) {
  year_month ym{year{y}, month{m}};
  if (!ym.ok()) return std::nullopt;
  return TimeInterval{sys_days{ym / 1}, sys_days{ym / last}};
}

std::optional<TimeInterval> single_day(int y, unsigned m, unsigned d) {
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return TimeInterval{sys_days{ymd}, sys_days{ymd}};
}

std::optional<TimeInterval> parse_point(std::string_view raw) {
  std::string s = text::trim(raw);
  if (auto t = s.find('T'); t != std::string::npos && t >= 10) s = s.substr(0, t);
  if (s.empty()) return std::nullopt;

  // ISO forms.
  auto parts = text::split(s, '-');
  if (std::isdigit(static_cast<unsigned char>(s[0])) && parts.size() <= 3) {
    auto y = to_int(parts[0]);
    if (y && parts[0].size() == 4) {
      if (parts.size() == 1) return whole_year(*y);
      auto m = to_int(parts[1]);
      if (!m || *m < 1) return std::nullopt;
      if (parts.size() == 2) return whole_month(*y, static_cast<unsigned>(*m));
      auto d = to_int(parts[2]);
      if (!d || *d < 1) return std::nullopt;
      return single_day(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
    }
  }

  // "September 4, 1998", "September 1998", "4 September 1998".
  std::string cleaned;
  for (char c : s) cleaned += (c == ',') ? ' ' : c;
  auto w = text::words(cleaned);
  if (w.size() == 3) {
    if (auto m = month_from_name(w[0])) {
      auto d = to_int(w[1]);
      auto y = to_int(w[2]);
      if (d && y && *d > 0) return single_day(*y, *m, static_cast<unsigned>(*d));
    }
    if (auto m = month_from_name(w[1])) {
      auto d = to_int(w[0]);
      auto y = to_int(w[2]);
      if (d && y && *d > 0) return single_day(*y, *m, static_cast<unsigned>(*d));
    }
  }
  if (w.size() == 2) {
    if (auto m = month_from_name(w[0])) {
      if (auto y = to_int(w[1])) return whole_month(*y, *m);
    }
  }
  return std::nullopt;
}

std::string format_day(sys_days d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace

json to_json(const Evidence& e) {
  return json{{"begin", e.begin}, {"doc_id", e.doc_id}, {"end", e.end}, {"text", e.text}};
}

Evidence evidence_from_json(const json& j) {
  Evidence e;
  e.doc_id = j.at("doc_id").get<std::string>();
  e.begin = j.at("begin").get<std::size_t>();
  e.end = j.at("end").get<std::size_t>();
  e.text = j.at("text").get<std::string>();
  return e;
}

std::optional<TimeInterval> TimeInterval::parse(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto a = parse_point(text.substr(0, slash));
    auto b = parse_point(text.substr(slash + 1));
    if (!a || !b || b->last < a->first) return std::nullopt;
    return TimeInterval{a->first, b->last};
  }
  return parse_point(text);
}

std::string TimeInterval::to_string() const {
  year_month_day f{first};
  year_month_day l{last};
  if (f.year() == l.year() && f.month() == January && f.day() == day{1} && l.month() == December &&
      l.day() == day{31}) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04d", static_cast<int>(f.year()));
    return buf;
  }
  if (first == last) return format_day(first);
  if (f.year() == l.year() && f.month() == l.month() && f.day() == day{1} &&
      sys_days{l} == sys_days{year_month{f.year(), f.month()} / std::chrono::last}) {
    return format_day(first).substr(0, 7);
  }
  return format_day(first) + "/" + format_day(last);
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace dialkg
