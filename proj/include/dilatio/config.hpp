#pragma once

// Scenario files: a nested key-value text format of blocks
//
//   kind [id] {
//     key = value        # numbers, bare words, "strings", [lists]
//   }
//
// with no embedded expressions.

#include "dilatio/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dilatio {

struct ConfigError : Error {
  ConfigError(const std::string& what, int line_, int column_)
      : Error(std::to_string(line_) + ":" + std::to_string(column_) + ": " + what), line(line_), column(column_) {}
  int line;
  int column;
};

struct Value {
  enum class Type { Number, Word, String, List };
  Type type = Type::Number;
  double number = 0.0;
  std::string text;
  std::vector<Value> items;
  int line = 0;
  int column = 0;

  static Value of_number(double v);
  static Value of_word(std::string w);

  /// Structural equality; positions are ignored.
  bool operator==(const Value& other) const;
};

struct Entry {
  std::string key;
  Value value;
  int line = 0;
  int column = 0;

  bool operator==(const Entry& other) const { return key == other.key && value == other.value; }
};

struct Block {
  std::string kind;
  std::string id;
  std::vector<Entry> entries;
  int line = 0;
  int column = 0;

  const Entry* find(std::string_view key) const;
  Entry* find(std::string_view key);
  bool operator==(const Block& other) const {
    return kind == other.kind && id == other.id && entries == other.entries;
  }
};

struct ConfigTree {
  std::vector<Block> blocks;
  bool operator==(const ConfigTree& other) const = default;
};

/// Throws ConfigError with the line and column of the offending token.
ConfigTree parse_config(std::string_view text);
ConfigTree read_config_file(const std::string& path);

std::string serialize_config(const ConfigTree& tree);
std::string serialize_value(const Value& v);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

}  // namespace dilatio
