#pragma once

#include <string>

#include "json.hpp"

namespace agnosticq {

using Json = nlohmann::ordered_json;

// Serializes with every floating-point number printed at 17 significant
// digits (lossless for IEEE doubles), so identical documents always produce
// identical bytes. indent < 0 emits compact output.
std::string dump_json17(const Json& j, int indent = -1);

// Formats one real at 17 significant digits.
std::string format_real17(double x);

Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace agnosticq
