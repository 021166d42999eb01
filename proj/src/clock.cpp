#include "huci/clock.hpp"

#include <chrono>
#include <cstdio>

#include "huci/error.hpp"

namespace huci {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m, d;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

Timestamp Timestamp::parse(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0;
  char tail = 0;
  const std::string buf(s);
  // Accept an optional fractional part with exactly three digits.
  int n = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &y, &mo, &d, &h, &mi, &sec, &ms, &tail);
  if (n != 8 || tail != 'Z' || buf.size() != 24) {
    ms = 0;
    n = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &sec, &tail);
    if (n != 7 || tail != 'Z' || buf.size() != 20) throw Error(ErrorCode::invalid_config, "bad timestamp '" + buf + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
    throw Error(ErrorCode::invalid_config, "bad timestamp '" + buf + "'");
  const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return Timestamp(((days * 24 + h) * 60 + mi) * 60'000 + sec * 1000LL + ms);
}

std::string Timestamp::to_string() const {
  const std::int64_t days = floor_div(millis_, 86'400'000);
  std::int64_t rem = millis_ - days * 86'400'000;
  const Civil c = civil_from_days(days);
  const auto h = static_cast<int>(rem / 3'600'000);
  rem %= 3'600'000;
  const auto mi = static_cast<int>(rem / 60'000);
  rem %= 60'000;
  const auto sec = static_cast<int>(rem / 1000);
  const auto ms = static_cast<int>(rem % 1000);
  char out[40];
  std::snprintf(out, sizeof out, "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<long long>(c.y), c.m, c.d, h, mi,
                sec, ms);
  return out;
}

Timestamp SystemClock::now() {
  const auto since = std::chrono::system_clock::now().time_since_epoch();
  return Timestamp(std::chrono::duration_cast<std::chrono::milliseconds>(since).count());
}

Timestamp ManualClock::now() {
  std::lock_guard lock(mu_);
  const Timestamp t = next_;
  next_ = Timestamp(next_.millis() + step_);
  return t;
}

void ManualClock::set(Timestamp t) {
  std::lock_guard lock(mu_);
  next_ = t;
}

}  // namespace huci
