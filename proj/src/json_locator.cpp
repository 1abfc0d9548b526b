#include "json_locator.hpp"

#include <algorithm>
#include <cctype>

namespace cinempc::detail {

namespace {

class Scanner {
 public:
  Scanner(std::string_view text, std::map<std::string, int>& out) : text_(text), out_(out) {}

  void value(const std::string& pointer) {
    skip_ws();
    out_.emplace(pointer, line_);
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      object(pointer);
    } else if (c == '[') {
      array(pointer);
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != ',' &&
             text_[pos_] != ']' && text_[pos_] != '}') {
        ++pos_;
      }
    }
  }

 private:
  void object(const std::string& pointer) {
    ++pos_;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] == '}') break;
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      const int key_line = line_;
      const std::string key = string();
      const std::string child = pointer + "/" + escape(key);
      out_.emplace(child, key_line);
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ':') ++pos_;
      value(child);
    }
    ++pos_;
  }

  void array(const std::string& pointer) {
    ++pos_;
    std::size_t index = 0;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] == ']') break;
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      value(pointer + "/" + std::to_string(index++));
    }
    ++pos_;
  }

  std::string string() {
    std::string s;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        s += text_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      if (text_[pos_] == '\n') ++line_;
      s += text_[pos_++];
    }
    ++pos_;
    return s;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') {
        out += "~0";
      } else if (c == '/') {
        out += "~1";
      } else {
        out += c;
      }
    }
    return out;
  }

  std::string_view text_;
  std::map<std::string, int>& out_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

std::map<std::string, int> locate_lines(std::string_view document) {
  std::map<std::string, int> out;
  Scanner(document, out).value("");
  return out;
}

int line_of_offset(std::string_view document, std::size_t offset) {
  offset = std::min(offset, document.size());
  return 1 + static_cast<int>(std::count(document.begin(), document.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace cinempc::detail
