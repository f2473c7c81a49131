#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fbq::cli {

using Json = nlohmann::ordered_json;

// 17 significant digits, so every double reads back bit-identically.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "null";
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void emit(const Json &j, std::ostream &os, int depth = 0) {
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close_pad(2 * depth, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << Json(it.key()).dump() << ": ";
                emit(it.value(), os, depth + 1);
            }
            os << "\n" << close_pad << "}";
            return;
        }
        case Json::value_t::array: {
            // Arrays of scalars stay on one line.
            bool flat = true;
            for (const auto &v : j) flat = flat && !v.is_structured();
            if (j.empty()) {
                os << "[]";
                return;
            }
            if (flat) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    emit(j[i], os, depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                emit(j[i], os, depth + 1);
            }
            os << "\n" << close_pad << "]";
            return;
        }
        case Json::value_t::number_float: os << format_number(j.get<double>()); return;
        default: os << j.dump(); return;
    }
}

inline std::string to_text(const Json &j) {
    std::ostringstream os;
    emit(j, os);
    os << "\n";
    return os.str();
}

}  // namespace fbq::cli
