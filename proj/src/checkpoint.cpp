#include "mvclust/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mvclust/errors.hpp"

namespace mvclust {
namespace {

constexpr const char* kMagic = "mvclust-checkpoint 1";

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::uint64_t to_little(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::little) return x;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

std::string read_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("checkpoint: truncated header");
    return line;
}

// "<key> <value>" with the value possibly empty.
std::string expect_key(std::istream& in, const std::string& key) {
    const std::string line = read_line(in);
    if (line.rfind(key + " ", 0) != 0)
        throw IoError("checkpoint: expected '" + key + "', got '" + line + "'");
    return line.substr(key.size() + 1);
}

std::size_t to_size(const std::string& s) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw IoError("checkpoint: bad integer '" + s + "'");
        return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
        throw IoError("checkpoint: bad integer '" + s + "'");
    }
}

std::vector<std::size_t> to_list(const std::string& s) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_size(item));
    return out;
}

}  // namespace

void save_checkpoint(const MflvcModel& model, std::ostream& out) {
    const ModelConfig& c = model.config();
    const auto params = model.all_params();
    out << kMagic << '\n'
        << "input_dims " << join(c.input_dims) << '\n'
        << "encoder_hidden " << join(c.encoder_hidden) << '\n'
        << "latent_dim " << c.latent_dim << '\n'
        << "high_dim " << c.high_dim << '\n'
        << "label_hidden " << join(c.label_hidden) << '\n'
        << "clusters " << c.clusters << '\n'
        << "tensors " << params.size() << '\n';
    for (const ParamTensor* p : params)
        out << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
    out << "end\n";
    for (const ParamTensor* p : params) {
        for (double v : p->value.values()) {
            const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
            char buf[8];
            std::memcpy(buf, &bits, 8);
            out.write(buf, 8);
        }
    }
    if (!out) throw IoError("checkpoint: write failed");
}

void save_checkpoint(const MflvcModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    save_checkpoint(model, out);
}

MflvcModel load_checkpoint(std::istream& in) {
    if (read_line(in) != kMagic) throw IoError("checkpoint: bad magic line");
    ModelConfig c;
    c.input_dims = to_list(expect_key(in, "input_dims"));
    c.encoder_hidden = to_list(expect_key(in, "encoder_hidden"));
    c.latent_dim = to_size(expect_key(in, "latent_dim"));
    c.high_dim = to_size(expect_key(in, "high_dim"));
    c.label_hidden = to_list(expect_key(in, "label_hidden"));
    c.clusters = to_size(expect_key(in, "clusters"));
    const std::size_t count = to_size(expect_key(in, "tensors"));

    Rng rng(0);
    MflvcModel model;
    try {
        model = init_model(c, rng);
    } catch (const Error& e) {
        throw IoError(std::string("checkpoint: invalid architecture: ") + e.what());
    }
    auto params = model.all_params();
    if (params.size() != count)
        throw IoError("checkpoint: expected " + std::to_string(params.size()) + " tensors, file has " +
                      std::to_string(count));
    for (ParamTensor* p : params) {
        std::stringstream ss(read_line(in));
        std::string name;
        std::size_t rows = 0, cols = 0;
        if (!(ss >> name >> rows >> cols) || name != p->name || rows != p->value.rows() ||
            cols != p->value.cols())
            throw IoError("checkpoint: tensor line does not match " + p->name + " " +
                          p->value.shape_string());
    }
    if (read_line(in) != "end") throw IoError("checkpoint: missing 'end' line");
    for (ParamTensor* p : params) {
        for (double& v : p->value.values()) {
            char buf[8];
            if (!in.read(buf, 8)) throw IoError("checkpoint: truncated payload in " + p->name);
            std::uint64_t bits = 0;
            std::memcpy(&bits, buf, 8);
            v = std::bit_cast<double>(to_little(bits));
        }
    }
    return model;
}

MflvcModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    return load_checkpoint(in);
}

}  // namespace mvclust
