#include "emag/time.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace emag {

namespace {

using namespace std::chrono;

std::optional<Timestamp> make_time(int y, int mo, int d, int h, int mi, int s,
                                   int offset_minutes) {
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || s < 0 || s > 60) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  auto t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} -
           minutes{offset_minutes};
  return time_point_cast<seconds>(t);
}

struct Cursor {
  std::string_view s;
  std::size_t i = 0;

  bool done() const { return i >= s.size(); }
  void skip_space() {
    while (!done() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ','))
      ++i;
  }
  bool digits(int count, int& out) {
    int v = 0;
    for (int k = 0; k < count; ++k) {
      if (done() || !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
      v = v * 10 + (s[i++] - '0');
    }
    out = v;
    return true;
  }
  int number(int max_digits) {
    int v = 0, n = 0;
    while (!done() && n < max_digits && std::isdigit(static_cast<unsigned char>(s[i]))) {
      v = v * 10 + (s[i++] - '0');
      ++n;
    }
    return n == 0 ? -1 : v;
  }
  std::string_view word() {
    std::size_t start = i;
    while (!done() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(start, i - start);
  }
  bool eat(char c) {
    if (!done() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int month_from_name(std::string_view name) {
  static constexpr std::array<const char*, 12> kMonths = {
      "jan", "feb", "mar", "apr", "may", "jun",
      "jul", "aug", "sep", "oct", "nov", "dec"};
  auto l = lower(name.substr(0, 3));
  for (std::size_t m = 0; m < kMonths.size(); ++m)
    if (l == kMonths[m]) return static_cast<int>(m) + 1;
  return 0;
}

std::optional<int> zone_offset(std::string_view zone) {
  auto z = lower(zone);
  if (z == "gmt" || z == "ut" || z == "utc" || z == "z") return 0;
  if (z == "est") return -5 * 60;
  if (z == "edt") return -4 * 60;
  if (z == "cst") return -6 * 60;
  if (z == "cdt") return -5 * 60;
  if (z == "mst") return -7 * 60;
  if (z == "mdt") return -6 * 60;
  if (z == "pst") return -8 * 60;
  if (z == "pdt") return -7 * 60;
  return std::nullopt;
}

}  // namespace

std::string format_iso8601(Timestamp t) {
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  Cursor c{s};
  int y, mo, d, h = 0, mi = 0, sec = 0;
  if (!c.digits(4, y) || !c.eat('-') || !c.digits(2, mo) || !c.eat('-') ||
      !c.digits(2, d)) {
    return std::nullopt;
  }
  if (c.done()) return make_time(y, mo, d, 0, 0, 0, 0);
  if (!c.eat('T') && !c.eat(' ')) return std::nullopt;
  if (!c.digits(2, h) || !c.eat(':') || !c.digits(2, mi)) return std::nullopt;
  if (c.eat(':') && !c.digits(2, sec)) return std::nullopt;
  if (c.eat('.')) {
    while (!c.done() && std::isdigit(static_cast<unsigned char>(s[c.i]))) ++c.i;
  }
  int offset = 0;
  if (c.eat('Z') || c.eat('z')) {
  } else if (!c.done() && (s[c.i] == '+' || s[c.i] == '-')) {
    int sign = s[c.i++] == '-' ? -1 : 1;
    int oh, om;
    if (!c.digits(2, oh)) return std::nullopt;
    c.eat(':');
    if (!c.digits(2, om)) return std::nullopt;
    offset = sign * (oh * 60 + om);
  }
  if (!c.done()) return std::nullopt;
  return make_time(y, mo, d, h, mi, sec, offset);
}

std::optional<Timestamp> parse_rfc822(std::string_view s) {
  Cursor c{s};
  c.skip_space();
  // optional day-of-week
  auto save = c.i;
  if (auto w = c.word(); !w.empty()) {
    c.skip_space();
  } else {
    c.i = save;
  }
  int d = c.number(2);
  if (d < 0) return std::nullopt;
  c.skip_space();
  c.eat('-');
  int mo = month_from_name(c.word());
  if (mo == 0) return std::nullopt;
  c.skip_space();
  c.eat('-');
  int y = c.number(4);
  if (y < 0) return std::nullopt;
  if (y < 100) y += y < 50 ? 2000 : 1900;
  c.skip_space();
  int h = c.number(2);
  if (h < 0 || !c.eat(':')) return std::nullopt;
  int mi = c.number(2);
  if (mi < 0) return std::nullopt;
  int sec = 0;
  if (c.eat(':')) {
    sec = c.number(2);
    if (sec < 0) return std::nullopt;
  }
  c.skip_space();
  int offset = 0;
  if (!c.done()) {
    if (s[c.i] == '+' || s[c.i] == '-') {
      int sign = s[c.i++] == '-' ? -1 : 1;
      int hhmm;
      if (!c.digits(4, hhmm)) return std::nullopt;
      offset = sign * ((hhmm / 100) * 60 + hhmm % 100);
    } else {
      auto z = zone_offset(c.word());
      if (!z) return std::nullopt;
      offset = *z;
    }
  }
  return make_time(y, mo, d, h, mi, sec, offset);
}

Clock system_clock() {
  return [] {
    return std::chrono::time_point_cast<std::chrono::seconds>(
        std::chrono::system_clock::now());
  };
}

}  // namespace emag
