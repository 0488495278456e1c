#include "kc/pipeline/toml.hpp"

#include <cctype>
#include <charconv>

#include "kc/common/error.hpp"

namespace kc::pipeline {

namespace {

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string key() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '"') return string();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-'))
      ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string string() {
    if (!eat('"')) fail("expected '\"'");
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) break;
        switch (s_[pos_++]) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail("unsupported escape");
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  Json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return string();
    if (c == '[') {
      ++pos_;
      Json arr = Json::array();
      if (eat(']')) return arr;
      for (;;) {
        arr.push_back(value());
        if (eat(']')) return arr;
        if (!eat(',')) fail("expected ',' or ']' in array");
        if (eat(']')) return arr;  // trailing comma
      }
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string word(s_.substr(start, pos_ - start));
    if (word == "true") return true;
    if (word == "false") return false;
    std::erase(word, '_');
    if (word.empty()) fail("missing value");
    const bool is_float = word.find_first_of(".eE") != std::string::npos && word.find("0x") != 0;
    if (!is_float) {
      if (word[0] == '-') {
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
        if (ec == std::errc() && p == word.data() + word.size()) return v;
      } else {
        std::uint64_t v = 0;
        const char* b = word.data() + (word[0] == '+' ? 1 : 0);
        const auto [p, ec] = std::from_chars(b, word.data() + word.size(), v);
        if (ec == std::errc() && p == word.data() + word.size()) return v;
      }
      fail("bad value '" + std::string(s_.substr(start, pos_ - start)) + "'");
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(word, &used);
      if (used == word.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad value '" + std::string(s_.substr(start, pos_ - start)) + "'");
  }

 private:
  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

Json parse_toml(std::string_view text) {
  Json root = Json::object();
  Json::json_pointer table("");
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    LineParser p(line, line_no);
    if (p.done()) continue;
    if (p.eat('[')) {
      table = Json::json_pointer("");
      do {
        table /= p.key();
      } while (p.eat('.'));
      if (!p.eat(']')) p.fail("expected ']'");
      if (!p.done()) p.fail("text after table header");
      if (root.contains(table) && !root[table].is_object()) p.fail("table redefines a value");
      if (!root.contains(table)) root[table] = Json::object();
      continue;
    }
    const std::string key = p.key();
    if (!p.eat('=')) p.fail("expected '='");
    Json value = p.value();
    if (!p.done()) p.fail("text after value");
    auto& obj = root[table];
    if (obj.contains(key)) p.fail("duplicate key '" + key + "'");
    obj[key] = std::move(value);
  }
  return root;
}

}  // namespace kc::pipeline
