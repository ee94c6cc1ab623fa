#pragma once

// Plain-text `key = value` files. Values are scalars or bracketed lists
// (`[a, b, "c d"]`); `#` starts a comment outside quotes.

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fiscal/error.hpp"
#include "fiscal/text.hpp"

namespace fiscal {

class ConfigFile {
 public:
  struct Value {
    std::vector<std::string> items;
    bool is_list = false;
    int line = 0;
  };

  static ConfigFile parse(std::istream& in, const std::string& source = "<config>") {
    ConfigFile cfg;
    cfg.source_ = source;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = strip_comment(raw);
      const auto body = text::trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos)
        throw Error(ErrorCode::InvalidConfig, where(source, line_no) + "expected key = value");
      const std::string key(text::trim(body.substr(0, eq)));
      if (key.empty()) throw Error(ErrorCode::InvalidConfig, where(source, line_no) + "empty key");
      if (cfg.values_.count(key)) throw Error(ErrorCode::InvalidConfig, where(source, line_no) + "duplicate key '" + key + "'");
      Value v;
      v.line = line_no;
      const auto rhs = text::trim(body.substr(eq + 1));
      if (!rhs.empty() && rhs.front() == '[') {
        if (rhs.back() != ']') throw Error(ErrorCode::InvalidConfig, where(source, line_no) + "unterminated list");
        v.is_list = true;
        const auto inner = rhs.substr(1, rhs.size() - 2);
        if (!text::trim(inner).empty())
          for (auto& item : text::split_fields(inner, ',')) v.items.push_back(unquote(text::trim(item)));
      } else {
        v.items.push_back(unquote(rhs));
      }
      cfg.values_.emplace(key, std::move(v));
      cfg.order_.push_back(key);
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::vector<std::string>& keys() const { return order_; }
  const std::string& source() const { return source_; }

  /// Throws InvalidConfig naming the first key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const {
    for (const auto& k : order_) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == k;
      if (!ok) throw Error(ErrorCode::InvalidConfig, where(source_, values_.at(k).line) + "unknown key '" + k + "'");
    }
  }

  std::string get_string(const std::string& key) const { return scalar(key); }

  double get_double(const std::string& key) const {
    const auto v = text::parse_double(scalar(key));
    if (!v) throw bad_value(key, "a number");
    return *v;
  }

  long long get_int(const std::string& key) const {
    const auto v = text::parse_int(scalar(key));
    if (!v) throw bad_value(key, "an integer");
    return *v;
  }

  bool get_bool(const std::string& key) const {
    const auto& s = scalar(key);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw bad_value(key, "a boolean");
  }

  /// Scalars are promoted to one-element lists.
  std::vector<std::string> get_list(const std::string& key) const { return at(key).items; }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
      const auto v = text::parse_double(item);
      if (!v) throw bad_value(key, "a list of numbers");
      out.push_back(*v);
    }
    return out;
  }

 private:
  static std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
  }

  const Value& at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::InvalidConfig, source_ + ": missing key '" + key + "'");
    return it->second;
  }

  const std::string& scalar(const std::string& key) const {
    const auto& v = at(key);
    if (v.is_list || v.items.size() != 1) throw bad_value(key, "a single value");
    return v.items.front();
  }

  Error bad_value(const std::string& key, const std::string& expected) const {
    return Error(ErrorCode::InvalidConfig, where(source_, at(key).line) + "'" + key + "' must be " + expected);
  }

  std::string source_;
  std::map<std::string, Value> values_;
  std::vector<std::string> order_;
};

}  // namespace fiscal
