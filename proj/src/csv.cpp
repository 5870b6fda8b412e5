#include "linksim/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "linksim/errors.hpp"

namespace linksim {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw config_error("output path '" + path + "': " + ec.message());
        }
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw config_error("output path '" + path + "': cannot open for writing");
    }
    out << content;
    if (!out) {
        throw config_error("output path '" + path + "': write failed");
    }
}

} // namespace linksim
