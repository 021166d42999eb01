#pragma once

#include <compare>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

namespace huci {

/// Milliseconds since the Unix epoch, rendered as RFC 3339 UTC with
/// millisecond precision ("2024-05-01T12:00:00.000Z").
class Timestamp {
 public:
  constexpr Timestamp() = default;
  constexpr explicit Timestamp(std::int64_t millis) : millis_(millis) {}

  static Timestamp parse(std::string_view rfc3339);  // throws Error{invalid_config}
  std::string to_string() const;
  constexpr std::int64_t millis() const { return millis_; }

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

 private:
  std::int64_t millis_ = 0;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() override;
};

/// Deterministic clock for tests: returns `start`, then advances by `step`
/// milliseconds on every call.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = Timestamp::parse("2024-01-01T00:00:00.000Z"),
                       std::int64_t step_millis = 1)
      : next_(start), step_(step_millis) {}

  Timestamp now() override;
  void set(Timestamp t);

 private:
  std::mutex mu_;
  Timestamp next_;
  std::int64_t step_;
};

}  // namespace huci
