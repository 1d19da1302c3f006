#include "cal/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cal/errors.hpp"

namespace cal {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line_no, std::size_t col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad numeric value '" +
                         s + "' in column " + std::to_string(col));
    return v;
}

int parse_label(const std::string& s, std::size_t line_no) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0)
        throw ParseError("line " + std::to_string(line_no) +
                         ": label must be a nonnegative integer, got '" + s + "'");
    return v;
}

} // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw SchemaError(path + ": empty file, expected header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_fields(line);
    if (header.size() < 2 || header.back() != "label")
        throw SchemaError(path + ": header must be f0,...,f{d-1},label");
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "f" + std::to_string(j))
            throw SchemaError(path + ": header column " + std::to_string(j) +
                              " is '" + header[j] + "', expected f" + std::to_string(j));

    Dataset ds;
    ds.d = d;
    ds.name = path;
    int max_label = -1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != d + 1)
            throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(d + 1) + " fields, got " +
                              std::to_string(fields.size()));
        Example e;
        e.features.resize(d);
        for (std::size_t j = 0; j < d; ++j)
            e.features[j] = parse_double(fields[j], line_no, j);
        e.label = parse_label(fields[d], line_no);
        max_label = std::max(max_label, e.label);
        ds.examples.push_back(std::move(e));
    }
    ds.k = static_cast<std::size_t>(max_label + 1);
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open " + path + " for writing");
    for (std::size_t j = 0; j < ds.d; ++j) out << "f" << j << ",";
    out << "label\n";
    char buf[64];
    for (const Example& e : ds.examples) {
        for (std::size_t j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", e.features[j]);
            out << buf << ",";
        }
        out << e.label << "\n";
    }
    if (!out)
        throw ParseError("write failed for " + path);
}

} // namespace cal
