#include "dilatio/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <sstream>

namespace dilatio {

namespace {

enum class Tok { Word, Number, String, LBrace, RBrace, LBracket, RBracket, Equals, Comma, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int line;
  int column;
};

bool word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '+';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    const int line = line_, col = col_;
    if (pos_ >= text_.size()) return {Tok::End, "", 0.0, line, col};
    const char c = text_[pos_];
    auto single = [&](Tok k) {
      advance();
      return Token{k, std::string(1, c), 0.0, line, col};
    };
    switch (c) {
      case '{':
        return single(Tok::LBrace);
      case '}':
        return single(Tok::RBrace);
      case '[':
        return single(Tok::LBracket);
      case ']':
        return single(Tok::RBracket);
      case '=':
        return single(Tok::Equals);
      case ',':
        return single(Tok::Comma);
      case '"':
        return string_token(line, col);
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') return number_token(line, col);
    if (word_start(c)) {
      std::string w;
      while (pos_ < text_.size() && word_char(text_[pos_])) {
        w += text_[pos_];
        advance();
      }
      if (w == "inf") return {Tok::Number, w, std::numeric_limits<double>::infinity(), line, col};
      return {Tok::Word, w, 0.0, line, col};
    }
    throw ConfigError(std::string("unexpected character '") + c + "'", line, col);
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token string_token(int line, int col) {
    advance();
    std::string s;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') throw ConfigError("unterminated string", line, col);
      const char c = text_[pos_];
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) throw ConfigError("unterminated string", line, col);
        const char e = text_[pos_];
        if (e != '"' && e != '\\') throw ConfigError("unknown escape in string", line_, col_);
        s += e;
        advance();
      } else {
        s += c;
      }
    }
    return {Tok::String, s, 0.0, line, col};
  }

  Token number_token(int line, int col) {
    std::string s;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                                   text_[pos_] == '-' || text_[pos_] == '+')) {
      s += text_[pos_];
      advance();
    }
    if (s == "-inf" || s == "+inf") return {Tok::Number, s, s[0] == '-' ? -kInf : kInf, line, col};
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    bool ok = !s.empty() && end == s.c_str() + s.size();
    for (char c : s) ok = ok && (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' ||
                                 c == 'e' || c == 'E');
    if (!ok) throw ConfigError("malformed number '" + s + "'", line, col);
    return {Tok::Number, s, v, line, col};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

  ConfigTree file() {
    ConfigTree tree;
    while (tok_.kind != Tok::End) tree.blocks.push_back(block());
    return tree;
  }

 private:
  Token take() {
    Token t = tok_;
    tok_ = lex_.next();
    return t;
  }

  Token expect(Tok kind, const char* what) {
    if (tok_.kind != kind) throw ConfigError(std::string("expected ") + what + describe(tok_), tok_.line, tok_.column);
    return take();
  }

  static std::string describe(const Token& t) {
    return t.kind == Tok::End ? " before end of file" : ", found '" + t.text + "'";
  }

  Block block() {
    const Token kind = expect(Tok::Word, "a block kind");
    Block b;
    b.kind = kind.text;
    b.line = kind.line;
    b.column = kind.column;
    if (tok_.kind == Tok::Word || tok_.kind == Tok::String) b.id = take().text;
    expect(Tok::LBrace, "'{'");
    while (tok_.kind != Tok::RBrace) {
      const Token key = expect(Tok::Word, "a key or '}'");
      for (const auto& e : b.entries)
        if (e.key == key.text) throw ConfigError("duplicate key '" + key.text + "'", key.line, key.column);
      expect(Tok::Equals, "'='");
      b.entries.push_back({key.text, value(), key.line, key.column});
    }
    take();
    return b;
  }

  Value value() {
    Value v;
    v.line = tok_.line;
    v.column = tok_.column;
    switch (tok_.kind) {
      case Tok::Number:
        v.type = Value::Type::Number;
        v.number = take().number;
        return v;
      case Tok::Word:
        v.type = Value::Type::Word;
        v.text = take().text;
        return v;
      case Tok::String:
        v.type = Value::Type::String;
        v.text = take().text;
        return v;
      case Tok::LBracket:
        take();
        v.type = Value::Type::List;
        while (tok_.kind != Tok::RBracket) {
          v.items.push_back(value());
          if (tok_.kind == Tok::Comma) {
            take();
          } else if (tok_.kind != Tok::RBracket) {
            throw ConfigError("expected ',' or ']'" + describe(tok_), tok_.line, tok_.column);
          }
        }
        take();
        return v;
      default:
        throw ConfigError("expected a value" + describe(tok_), tok_.line, tok_.column);
    }
  }

  Lexer lex_;
  Token tok_;
};

bool bare_word(const std::string& s) {
  if (s.empty() || !word_start(s[0]) || s == "inf") return false;
  for (char c : s)
    if (!word_char(c)) return false;
  return true;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Value Value::of_number(double v) {
  Value out;
  out.type = Type::Number;
  out.number = v;
  return out;
}

Value Value::of_word(std::string w) {
  Value out;
  out.type = Type::Word;
  out.text = std::move(w);
  return out;
}

bool Value::operator==(const Value& other) const {
  if (type != other.type) return false;
  switch (type) {
    case Type::Number:
      return number == other.number || (std::isnan(number) && std::isnan(other.number));
    case Type::Word:
    case Type::String:
      return text == other.text;
    case Type::List:
      return items == other.items;
  }
  return false;
}

const Entry* Block::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

Entry* Block::find(std::string_view key) {
  for (auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

ConfigTree parse_config(std::string_view text) { return Parser(text).file(); }

ConfigTree read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string serialize_value(const Value& v) {
  switch (v.type) {
    case Value::Type::Number:
      return format_number(v.number);
    case Value::Type::Word:
      return bare_word(v.text) ? v.text : quoted(v.text);
    case Value::Type::String:
      return quoted(v.text);
    case Value::Type::List: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) out += (i ? ", " : "") + serialize_value(v.items[i]);
      return out + "]";
    }
  }
  return "";
}

std::string serialize_config(const ConfigTree& tree) {
  std::string out;
  for (std::size_t i = 0; i < tree.blocks.size(); ++i) {
    const Block& b = tree.blocks[i];
    if (i) out += "\n";
    out += b.kind;
    if (!b.id.empty()) out += " " + (bare_word(b.id) ? b.id : quoted(b.id));
    out += " {\n";
    for (const auto& e : b.entries) out += "  " + e.key + " = " + serialize_value(e.value) + "\n";
    out += "}\n";
  }
  return out;
}

}  // namespace dilatio
