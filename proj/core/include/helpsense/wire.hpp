#pragma once

// Text encoding shared by every line-oriented file format: fixed-precision
// numbers, quoted strings and `key=value` field lists.

#include <string>
#include <string_view>
#include <vector>

namespace helpsense::wire {

inline constexpr int kTimeDecimals = 3;
inline constexpr int kValueDecimals = 6;

/// Fixed-point rendering with '.' as separator. Negative zero prints unsigned.
std::string format_fixed(double value, int decimals);

/// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);

/// Shortest text, always with a fractional part ("4" becomes "4.0").
std::string format_short(double value);

/// Rounds through the fixed-point text form, so the result is exactly what a
/// reader of `format_fixed(value, decimals)` would obtain.
double quantize(double value, int decimals);

inline double quantize_time(double t) { return quantize(t, kTimeDecimals); }
inline double quantize_value(double v) { return quantize(v, kValueDecimals); }

/// Throws std::invalid_argument unless the whole of `text` is a finite number.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);
unsigned long long parse_uint(std::string_view text);
bool parse_bool(std::string_view text);

std::string quote(std::string_view raw);

struct Field {
  std::string key;
  std::string value;  // unescaped
  bool quoted = false;
};

/// Splits `a=1 b="x y"` into fields. Throws std::invalid_argument on syntax errors.
std::vector<Field> split_fields(std::string_view line);

/// Strict field lookup over the result of split_fields.
class FieldSet {
 public:
  explicit FieldSet(std::vector<Field> fields);

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;  // throws std::invalid_argument if absent
  double number(std::string_view key) const;
  /// Throws if any field outside `allowed` is present or any key repeats.
  void expect_only(std::initializer_list<std::string_view> allowed) const;

  const std::vector<Field>& fields() const { return fields_; }

 private:
  std::vector<Field> fields_;
};

}  // namespace helpsense::wire
