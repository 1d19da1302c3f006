#include "cal/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cal/errors.hpp"

namespace cal {

namespace {

constexpr char kMagic[4] = {'C', 'A', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ofstream& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::ifstream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace

void save_model(const ModelParams& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.layer_dims.size()));
    for (std::size_t d : model.layer_dims) put_u64(out, d);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        for (double v : model.weights[l].data) put_f64(out, v);
        for (double v : model.biases[l]) put_f64(out, v);
        for (double v : model.weight_momentum[l].data) put_f64(out, v);
        for (double v : model.bias_momentum[l]) put_f64(out, v);
    }
    if (!out)
        throw ParseError("write failed for " + path);
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw SchemaError(path + ": not a model checkpoint");
    std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw SchemaError(path + ": unsupported checkpoint version " +
                          std::to_string(version));
    std::uint32_t n_dims = get_u32(in);
    if (n_dims < 2 || n_dims > 64)
        throw SchemaError(path + ": implausible layer count");

    ModelParams m;
    m.layer_dims.resize(n_dims);
    for (auto& d : m.layer_dims) d = static_cast<std::size_t>(get_u64(in));
    for (std::size_t l = 0; l + 1 < n_dims; ++l) {
        std::size_t rows = m.layer_dims[l + 1], cols = m.layer_dims[l];
        Matrix w(rows, cols), vw(rows, cols);
        std::vector<double> b(rows), vb(rows);
        for (double& v : w.data) v = get_f64(in);
        for (double& v : b) v = get_f64(in);
        for (double& v : vw.data) v = get_f64(in);
        for (double& v : vb) v = get_f64(in);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
        m.weight_momentum.push_back(std::move(vw));
        m.bias_momentum.push_back(std::move(vb));
    }
    if (!in)
        throw SchemaError(path + ": truncated checkpoint");
    return m;
}

} // namespace cal
