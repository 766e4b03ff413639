#include "dts/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "dts/error.hpp"

namespace dts {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("truncated checkpoint: " + path);
    return v;
}

void write_string(std::ofstream& out, std::string_view s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const std::string& path) {
    const auto len = read_pod<std::uint32_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw IoError("truncated checkpoint: " + path);
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);

    const EncoderConfig& cfg = checkpoint.config;
    write_pod<std::int32_t>(out, cfg.frame_feature_dim);
    write_pod<std::int32_t>(out, cfg.word_embedding_dim);
    write_pod<std::int32_t>(out, cfg.gru_hidden_dim);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.conv_filter_widths.size()));
    for (int w : cfg.conv_filter_widths) write_pod<std::int32_t>(out, w);
    write_pod<std::int32_t>(out, cfg.conv_filters_per_width);
    write_pod<std::int32_t>(out, cfg.common_dim);
    write_pod<std::int32_t>(out, cfg.vocab_size);

    write_pod<std::uint64_t>(out, checkpoint.vocab_hash);
    write_pod<std::int32_t>(out, checkpoint.epoch);
    write_pod<double>(out, checkpoint.validation_score);

    // Parameter blocks in visitor order. The count goes first so loads can
    // detect both missing and extra blocks.
    std::uint32_t n_blocks = 0;
    const ModelParameters& params = checkpoint.params;
    visit_trainable(params, [&](std::string_view, std::span<const double>) { ++n_blocks; });
    visit_buffers(params, [&](std::string_view, std::span<const double>) { ++n_blocks; });
    write_pod(out, n_blocks);

    const auto dump = [&](std::string_view name, std::span<const double> values) {
        write_string(out, name);
        write_pod<std::uint64_t>(out, values.size());
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    };
    visit_trainable(params, dump);
    visit_buffers(params, dump);
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_vocab_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("checkpoint lacks the DTCK magic", 0);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion) {
        std::ostringstream msg;
        msg << "unsupported checkpoint version " << version;
        throw ParseError(msg.str(), 0);
    }

    Checkpoint cp;
    cp.config.frame_feature_dim = read_pod<std::int32_t>(in, path);
    cp.config.word_embedding_dim = read_pod<std::int32_t>(in, path);
    cp.config.gru_hidden_dim = read_pod<std::int32_t>(in, path);
    const auto n_widths = read_pod<std::uint32_t>(in, path);
    cp.config.conv_filter_widths.clear();
    for (std::uint32_t i = 0; i < n_widths; ++i)
        cp.config.conv_filter_widths.push_back(read_pod<std::int32_t>(in, path));
    cp.config.conv_filters_per_width = read_pod<std::int32_t>(in, path);
    cp.config.common_dim = read_pod<std::int32_t>(in, path);
    cp.config.vocab_size = read_pod<std::int32_t>(in, path);
    cp.config.validate();

    cp.vocab_hash = read_pod<std::uint64_t>(in, path);
    cp.epoch = read_pod<std::int32_t>(in, path);
    cp.validation_score = read_pod<double>(in, path);
    if (expected_vocab_hash != cp.vocab_hash) {
        std::ostringstream msg;
        msg << "checkpoint was trained against a different vocabulary (hash " << std::hex
            << cp.vocab_hash << ", expected " << expected_vocab_hash << ")";
        throw ValueError(msg.str());
    }

    cp.params = zero_parameters(cp.config);
    const auto n_blocks = read_pod<std::uint32_t>(in, path);
    std::vector<std::pair<std::string, std::span<double>>> slots;
    visit_trainable(cp.params, [&](std::string_view name, std::span<double> values) {
        slots.emplace_back(std::string(name), values);
    });
    visit_buffers(cp.params, [&](std::string_view name, std::span<double> values) {
        slots.emplace_back(std::string(name), values);
    });
    if (n_blocks != slots.size())
        throw ParseError("checkpoint block count does not match the model layout", 0);
    for (auto& [name, dst] : slots) {
        const std::string got = read_string(in, path);
        if (got != name)
            throw ParseError("checkpoint block '" + got + "' arrived where '" + name +
                                 "' was expected",
                             0);
        const auto count = read_pod<std::uint64_t>(in, path);
        if (count != dst.size())
            throw ParseError("checkpoint block '" + name + "' has the wrong size", 0);
        in.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint: " + path);
    }

    set_batchnorm_mode(cp.params, BatchNormMode::infer);
    return cp;
}

}  // namespace dts
