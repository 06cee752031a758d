#include "mvclust/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mvclust/errors.hpp"

namespace mvclust {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw PreconditionError("config: invalid value '" + value + "' for key '" + key + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || p != end) bad_value(key, v);
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || p != end) bad_value(key, v);
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || p != end) bad_value(key, v);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (v.empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
    return out;
}

std::string list_text(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Field size_field(std::string key, Access acc) {
    return {key, [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v) { acc(c) = parse_size(key, v); }};
}

template <typename Access>
Field u64_field(std::string key, Access acc) {
    return {key, [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v) { acc(c) = parse_u64(key, v); }};
}

template <typename Access>
Field real_field(std::string key, Access acc) {
    return {key, [acc](const RunConfig& c) { return format_double(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v) { acc(c) = parse_real(key, v); }};
}

template <typename Access>
Field bool_field(std::string key, Access acc) {
    return {key,
            [acc](const RunConfig& c) {
                return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false");
            },
            [acc, key](RunConfig& c, const std::string& v) { acc(c) = parse_bool(key, v); }};
}

template <typename Access>
Field list_field(std::string key, Access acc) {
    return {key, [acc](const RunConfig& c) { return list_text(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v) { acc(c) = parse_list(key, v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        u64_field("seed", [](RunConfig& c) -> auto& { return c.train.seed; }),
        size_field("pretrain_epochs", [](RunConfig& c) -> auto& { return c.train.pretrain_epochs; }),
        size_field("contrastive_epochs",
                   [](RunConfig& c) -> auto& { return c.train.contrastive_epochs; }),
        size_field("finetune_epochs", [](RunConfig& c) -> auto& { return c.train.finetune_epochs; }),
        size_field("batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; }),
        bool_field("full_batch", [](RunConfig& c) -> auto& { return c.train.full_batch; }),
        real_field("lr", [](RunConfig& c) -> auto& { return c.train.lr; }),
        real_field("tau_feature", [](RunConfig& c) -> auto& { return c.train.contrastive.tau_feature; }),
        real_field("tau_label", [](RunConfig& c) -> auto& { return c.train.contrastive.tau_label; }),
        real_field("lambda_feature",
                   [](RunConfig& c) -> auto& { return c.train.contrastive.lambda_feature; }),
        real_field("lambda_label",
                   [](RunConfig& c) -> auto& { return c.train.contrastive.lambda_label; }),
        bool_field("use_reconstruction",
                   [](RunConfig& c) -> auto& { return c.train.ablation.use_reconstruction; }),
        bool_field("use_high_level",
                   [](RunConfig& c) -> auto& { return c.train.ablation.use_high_level; }),
        bool_field("contrast_on_z", [](RunConfig& c) -> auto& { return c.train.ablation.contrast_on_z; }),
        bool_field("contrast_on_q", [](RunConfig& c) -> auto& { return c.train.ablation.contrast_on_q; }),
        list_field("encoder_hidden", [](RunConfig& c) -> auto& { return c.train.encoder_hidden; }),
        size_field("latent_dim", [](RunConfig& c) -> auto& { return c.train.latent_dim; }),
        size_field("high_dim", [](RunConfig& c) -> auto& { return c.train.high_dim; }),
        list_field("label_hidden", [](RunConfig& c) -> auto& { return c.train.label_hidden; }),
        size_field("kmeans_restarts", [](RunConfig& c) -> auto& { return c.train.kmeans.n_restarts; }),
        size_field("kmeans_max_iter", [](RunConfig& c) -> auto& { return c.train.kmeans.max_iter; }),
        size_field("refresh_every", [](RunConfig& c) -> auto& { return c.train.refresh_every; }),
        size_field("eval_every", [](RunConfig& c) -> auto& { return c.train.eval_every; }),
        size_field("samples", [](RunConfig& c) -> auto& { return c.synthetic.samples; }),
        size_field("views", [](RunConfig& c) -> auto& { return c.synthetic.views; }),
        size_field("clusters", [](RunConfig& c) -> auto& { return c.synthetic.clusters; }),
        size_field("common_dim", [](RunConfig& c) -> auto& { return c.synthetic.common_dim; }),
        size_field("private_dim", [](RunConfig& c) -> auto& { return c.synthetic.private_dim; }),
        list_field("view_dims", [](RunConfig& c) -> auto& { return c.synthetic.view_dims; }),
        real_field("private_strength",
                   [](RunConfig& c) -> auto& { return c.synthetic.private_strength; }),
        real_field("noise_sigma", [](RunConfig& c) -> auto& { return c.synthetic.noise_sigma; }),
        real_field("cluster_separation",
                   [](RunConfig& c) -> auto& { return c.synthetic.cluster_separation; }),
        real_field("cluster_jitter", [](RunConfig& c) -> auto& { return c.synthetic.cluster_jitter; }),
        u64_field("data_seed", [](RunConfig& c) -> auto& { return c.synthetic.seed; }),
    };
    return table;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw PreconditionError("config: expected key=value, got '" + assignment + "'");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw PreconditionError("config: unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (!line.empty()) apply_setting(cfg, line);
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) out += f.key + "=" + f.get(cfg) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_text(a) == to_text(b); }

}  // namespace mvclust
