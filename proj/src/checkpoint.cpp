#include "dast/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace dast {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'S', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    std::uint32_t n = 0;
    read_pod(is, n);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

} // namespace

void save_checkpoint(const DastConfig& c, const ModelParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path + "'");
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint64_t>(c.d_model));
    write_pod(os, static_cast<std::uint64_t>(c.n_encoder_blocks));
    write_pod(os, static_cast<std::uint64_t>(c.n_decoder_blocks));
    write_pod(os, static_cast<std::uint64_t>(c.heads));
    write_pod(os, static_cast<std::uint64_t>(c.window));
    write_pod(os, static_cast<std::uint64_t>(c.sensor_count));
    write_pod(os, static_cast<std::uint64_t>(c.stat_rows));
    write_pod(os, static_cast<std::uint64_t>(c.output_hidden));
    write_pod(os, c.dropout);
    write_pod(os, static_cast<std::uint32_t>(c.variant));
    write_pod(os, static_cast<std::uint8_t>(c.split_heads ? 1 : 0));

    const auto named = params.named_parameters();
    write_pod(os, static_cast<std::uint64_t>(named.size()));
    for (const auto& [name, t] : named) {
        write_string(os, name);
        write_pod(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) write_pod(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(t.values().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw IoError("'" + path + "' is not a model checkpoint");
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kVersion)
        throw IoError("'" + path + "' has unsupported checkpoint version " +
                      std::to_string(version));

    Checkpoint ck;
    std::uint64_t u = 0;
    read_pod(is, u); ck.config.d_model = u;
    read_pod(is, u); ck.config.n_encoder_blocks = u;
    read_pod(is, u); ck.config.n_decoder_blocks = u;
    read_pod(is, u); ck.config.heads = u;
    read_pod(is, u); ck.config.window = u;
    read_pod(is, u); ck.config.sensor_count = u;
    read_pod(is, u); ck.config.stat_rows = u;
    read_pod(is, u); ck.config.output_hidden = u;
    read_pod(is, ck.config.dropout);
    std::uint32_t variant = 0;
    read_pod(is, variant);
    ck.config.variant = static_cast<Variant>(variant);
    std::uint8_t split = 0;
    read_pod(is, split);
    ck.config.split_heads = split != 0;

    ck.params = ModelParams::init(ck.config, 0);
    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : ck.params.named_parameters()) by_name.emplace(name, t);

    std::uint64_t count = 0;
    read_pod(is, count);
    if (count != by_name.size())
        throw ConfigError("'" + path + "' holds " + std::to_string(count) +
                          " tensors, config implies " + std::to_string(by_name.size()));
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = read_string(is);
        std::uint32_t rank = 0;
        read_pod(is, rank);
        Shape shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) {
            std::uint64_t dim = 0;
            read_pod(is, dim);
            shape[d] = dim;
        }
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ConfigError("'" + path + "' holds unknown tensor '" + name + "'");
        if (it->second.shape() != shape)
            throw ConfigError("tensor '" + name + "' has shape " + shape_str(shape) +
                              ", config implies " + shape_str(it->second.shape()));
        is.read(reinterpret_cast<char*>(it->second.values().data()),
                static_cast<std::streamsize>(it->second.size() * sizeof(double)));
    }
    if (!is) throw IoError("truncated checkpoint '" + path + "'");
    return ck;
}

} // namespace dast
