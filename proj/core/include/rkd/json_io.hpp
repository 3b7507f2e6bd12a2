#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace rkd {

using Json = nlohmann::ordered_json;

// Serializes with every floating-point value printed at 17 significant
// digits. Key order is insertion order, so identical inputs give identical
// bytes. Non-finite numbers become the strings "inf", "-inf" and "nan".
std::string dump_json(const Json& value, int indent = 2);

// Shortest decimal string that parses back to exactly the same double.
std::string shortest_repr(double value);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
void write_json_file(const std::string& path, const Json& value);

// Accepts a JSON number or one of the non-finite marker strings.
double json_to_double(const Json& value);
Json double_to_json(double value);

// FNV-1a over the canonical dump, rendered as 16 hex digits.
std::string content_hash(const std::string& bytes);

}  // namespace rkd
