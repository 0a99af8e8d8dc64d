#include "agnosticq/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace agnosticq {

std::string format_real17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

void escape_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
    const bool pretty = indent >= 0;
    auto newline = [&](int d) {
        if (pretty) {
            out += '\n';
            out.append(static_cast<std::size_t>(indent) * d, ' ');
        }
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) { out += "{}"; break; }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                escape_string(it.key(), out);
                out += pretty ? ": " : ":";
                dump_rec(it.value(), indent, depth + 1, out);
            }
            newline(depth);
            out += '}';
            break;
        }
        case Json::value_t::array: {
            if (j.empty()) { out += "[]"; break; }
            out += '[';
            bool first = true;
            for (const auto& el : j) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                dump_rec(el, indent, depth + 1, out);
            }
            newline(depth);
            out += ']';
            break;
        }
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            // JSON has no non-finite numbers
            out += std::isfinite(x) ? format_real17(x) : "null";
            break;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump_json17(const Json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    if (indent >= 0) out += '\n';
    return out;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    Json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

}  // namespace agnosticq
