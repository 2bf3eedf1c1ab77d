#include "helpsense/wire.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace helpsense::wire {

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) throw std::invalid_argument("cannot format non-finite number");
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw std::invalid_argument("number too large to format");
  std::string out(buf.data(), end);
  if (!out.empty() && out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

std::string format_exact(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("cannot format non-finite number");
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::invalid_argument("number too large to format");
  return std::string(buf.data(), end);
}

std::string format_short(double value) {
  std::string out = format_exact(value);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

double quantize(double value, int decimals) {
  return parse_double(format_fixed(value, decimals));
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(value)) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

unsigned long long parse_uint(std::string_view text) {
  unsigned long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not a non-negative integer: '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(text) + "'");
}

std::string quote(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() + 2);
  out += '"';
  for (char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

}  // namespace

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> fields;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (true) {
    while (i < n && is_space(line[i])) ++i;
    if (i >= n) break;
    const std::size_t key_begin = i;
    while (i < n && line[i] != '=' && !is_space(line[i])) ++i;
    if (i >= n || line[i] != '=') {
      throw std::invalid_argument("expected key=value near '" +
                                  std::string(line.substr(key_begin, i - key_begin)) + "'");
    }
    Field field;
    field.key = std::string(line.substr(key_begin, i - key_begin));
    if (field.key.empty()) throw std::invalid_argument("empty field name");
    ++i;  // '='
    if (i < n && line[i] == '"') {
      field.quoted = true;
      ++i;
      bool closed = false;
      while (i < n) {
        char c = line[i++];
        if (c == '"') {
          closed = true;
          break;
        }
        if (c != '\\') {
          field.value += c;
          continue;
        }
        if (i >= n) break;
        char e = line[i++];
        switch (e) {
          case '"': field.value += '"'; break;
          case '\\': field.value += '\\'; break;
          case 'n': field.value += '\n'; break;
          case 'r': field.value += '\r'; break;
          case 't': field.value += '\t'; break;
          default:
            throw std::invalid_argument(std::string("unknown escape \\") + e + " in field " +
                                        field.key);
        }
      }
      if (!closed) throw std::invalid_argument("unterminated string in field " + field.key);
      if (i < n && !is_space(line[i])) {
        throw std::invalid_argument("garbage after quoted value of field " + field.key);
      }
    } else {
      const std::size_t value_begin = i;
      while (i < n && !is_space(line[i])) ++i;
      field.value = std::string(line.substr(value_begin, i - value_begin));
    }
    fields.push_back(std::move(field));
  }
  return fields;
}

FieldSet::FieldSet(std::vector<Field> fields) : fields_(std::move(fields)) {}

bool FieldSet::has(std::string_view key) const {
  for (const auto& f : fields_) {
    if (f.key == key) return true;
  }
  return false;
}

const std::string& FieldSet::get(std::string_view key) const {
  for (const auto& f : fields_) {
    if (f.key == key) return f.value;
  }
  throw std::invalid_argument("missing field " + std::string(key));
}

double FieldSet::number(std::string_view key) const {
  try {
    return parse_double(get(key));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("field " + std::string(key) + ": " + e.what());
  }
}

void FieldSet::expect_only(std::initializer_list<std::string_view> allowed) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    bool known = false;
    for (auto a : allowed) known = known || a == fields_[i].key;
    if (!known) throw std::invalid_argument("unexpected field " + fields_[i].key);
    for (std::size_t j = 0; j < i; ++j) {
      if (fields_[j].key == fields_[i].key) {
        throw std::invalid_argument("duplicate field " + fields_[i].key);
      }
    }
  }
}

}  // namespace helpsense::wire
