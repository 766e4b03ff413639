#include "dts/dataset.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dts/error.hpp"
#include "dts/rng.hpp"
#include "dts/vocab.hpp"

namespace dts {

namespace {

constexpr char kFeatureMagic[4] = {'D', 'T', 'F', 'F'};

[[noreturn]] void line_fail(const std::string& what, std::size_t line_no) {
    throw ParseError(what, line_no);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("truncated feature file: " + path);
    return v;
}

}  // namespace

int Dataset::frame_dim() const {
    if (videos.empty()) return 0;
    const auto& frames = videos.begin()->second;
    return frames.empty() ? 0 : static_cast<int>(frames.front().size());
}

void Dataset::validate() const {
    const int dim = frame_dim();
    for (const auto& [id, frames] : videos) {
        for (const Vec& f : frames) {
            if (static_cast<int>(f.size()) != dim)
                throw ValueError("video '" + id + "' has inconsistent frame dimension");
        }
    }
    for (const auto& [id, caps] : captions) {
        if (caps.empty()) throw ValueError("video '" + id + "' has an empty caption list");
        for (const std::string& c : caps)
            if (c.empty()) throw ValueError("video '" + id + "' has an empty caption");
    }
    for (const VideoTextPair& p : pairs) {
        auto vit = videos.find(p.video_id);
        if (vit == videos.end())
            throw ValueError("pair references unknown video '" + p.video_id + "'");
        auto cit = captions.find(p.video_id);
        if (cit == captions.end() || p.caption_index >= cit->second.size())
            throw ValueError("pair references missing caption of video '" + p.video_id + "'");
    }
}

std::vector<std::string> Dataset::all_captions() const {
    std::vector<std::string> out;
    for (const auto& [id, caps] : captions) out.insert(out.end(), caps.begin(), caps.end());
    return out;
}

void load_captions_file(const std::string& path, Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open captions file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) line_fail("captions line missing tab separator", line_no);
        std::string id = line.substr(0, tab);
        std::string caption = line.substr(tab + 1);
        if (id.empty()) line_fail("captions line has empty video id", line_no);
        if (caption.empty()) line_fail("captions line has empty caption", line_no);
        auto& list = ds.captions[id];
        ds.pairs.push_back(VideoTextPair{std::move(id), list.size()});
        list.push_back(std::move(caption));
    }
}

void save_captions_file(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write captions file: " + path);
    for (const auto& [id, caps] : ds.captions)
        for (const std::string& c : caps) out << id << '\t' << c << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void load_features_text(const std::string& path, Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream header(line);
        std::string id;
        long n_frames = -1, dim = -1;
        {
            const auto tab1 = line.find('\t');
            const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                        : line.find('\t', tab1 + 1);
            if (tab2 == std::string::npos)
                line_fail("feature header needs video_id<TAB>n_frames<TAB>dim", line_no);
            id = line.substr(0, tab1);
            try {
                n_frames = std::stol(line.substr(tab1 + 1, tab2 - tab1 - 1));
                dim = std::stol(line.substr(tab2 + 1));
            } catch (const std::exception&) {
                line_fail("feature header counts are not integers", line_no);
            }
        }
        if (id.empty()) line_fail("feature header has empty video id", line_no);
        if (n_frames < 0 || dim < 1) line_fail("feature header counts out of range", line_no);
        if (ds.videos.count(id)) line_fail("duplicate video id '" + id + "'", line_no);

        std::vector<Vec> frames;
        frames.reserve(static_cast<std::size_t>(n_frames));
        for (long f = 0; f < n_frames; ++f) {
            if (!std::getline(in, line)) line_fail("missing frame row for video '" + id + "'", line_no);
            ++line_no;
            std::istringstream row(line);
            Vec values;
            values.reserve(static_cast<std::size_t>(dim));
            double v;
            while (row >> v) values.push_back(v);
            if (static_cast<long>(values.size()) != dim)
                line_fail("frame row has wrong value count", line_no);
            frames.push_back(std::move(values));
        }
        ds.videos.emplace(std::move(id), std::move(frames));
    }
}

void save_features_text(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature file: " + path);
    out.precision(17);
    for (const auto& [id, frames] : ds.videos) {
        const std::size_t dim = frames.empty() ? 0 : frames.front().size();
        out << id << '\t' << frames.size() << '\t' << dim << '\n';
        for (const Vec& f : frames) {
            for (std::size_t i = 0; i < f.size(); ++i) out << (i ? " " : "") << f[i];
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

void load_features_binary(const std::string& path, Dataset& ds) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw ParseError("feature file lacks the DTFF magic", 0);
    const std::uint32_t n_videos = read_u32(in, path);
    for (std::uint32_t v = 0; v < n_videos; ++v) {
        const std::uint32_t id_len = read_u32(in, path);
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        const std::uint32_t n_frames = read_u32(in, path);
        const std::uint32_t dim = read_u32(in, path);
        if (!in) throw IoError("truncated feature file: " + path);
        if (ds.videos.count(id))
            throw ParseError("duplicate video id '" + id + "'", 0);
        std::vector<Vec> frames(n_frames, Vec(dim));
        for (auto& f : frames) {
            in.read(reinterpret_cast<char*>(f.data()),
                    static_cast<std::streamsize>(sizeof(double) * dim));
            if (!in) throw IoError("truncated feature file: " + path);
        }
        ds.videos.emplace(std::move(id), std::move(frames));
    }
}

void save_features_binary(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write feature file: " + path);
    out.write(kFeatureMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(ds.videos.size()));
    for (const auto& [id, frames] : ds.videos) {
        write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        write_u32(out, static_cast<std::uint32_t>(frames.size()));
        const std::uint32_t dim =
            frames.empty() ? 0 : static_cast<std::uint32_t>(frames.front().size());
        write_u32(out, dim);
        for (const Vec& f : frames)
            out.write(reinterpret_cast<const char*>(f.data()),
                      static_cast<std::streamsize>(sizeof(double) * f.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

std::size_t apply_word_embedding_file(const std::string& path, const Vocabulary& vocab,
                                      Tensor2& embedding) {
    if (embedding.rows != vocab.size())
        throw ShapeError("embedding matrix row count does not match the vocabulary");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word-embedding file: " + path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t filled = 0;
    std::vector<bool> seen(static_cast<std::size_t>(vocab.size()), false);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        row >> token;
        const int id = vocab.index_of(token);
        if (id < 0) continue;  // vectors for words outside the vocabulary are skipped
        Vec values;
        double v;
        while (row >> v) values.push_back(v);
        if (static_cast<int>(values.size()) != embedding.cols)
            line_fail("embedding row for '" + token + "' has wrong dimension", line_no);
        auto dst = embedding.row(id);
        for (std::size_t i = 0; i < values.size(); ++i) dst[i] = values[i];
        if (!seen[static_cast<std::size_t>(id)]) {
            seen[static_cast<std::size_t>(id)] = true;
            ++filled;
        }
    }
    return filled;
}

BatchPlan make_batch_plan(std::size_t n_pairs, int batch_size, std::uint64_t seed, int epoch) {
    if (batch_size < 1) throw ValueError("batch_size must be >= 1");
    if (epoch < 0) throw ValueError("epoch must be >= 0");
    BatchPlan plan;
    plan.seed = seed;
    plan.batch_size = batch_size;
    plan.permutation.resize(n_pairs);
    std::iota(plan.permutation.begin(), plan.permutation.end(), 0);
    // Distinct stream per epoch, reproducible across runs.
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(epoch) + 1)));
    rng.shuffle(plan.permutation);
    return plan;
}

std::vector<std::span<const std::size_t>> plan_batches(const BatchPlan& plan) {
    std::vector<std::span<const std::size_t>> batches;
    const std::size_t step = static_cast<std::size_t>(plan.batch_size);
    for (std::size_t start = 0; start < plan.permutation.size(); start += step) {
        const std::size_t len = std::min(step, plan.permutation.size() - start);
        batches.emplace_back(plan.permutation.data() + start, len);
    }
    return batches;
}

}  // namespace dts
