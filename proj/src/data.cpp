#include "mvclust/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>

#include "mvclust/errors.hpp"

namespace mvclust {

namespace fs = std::filesystem;

std::vector<std::size_t> MultiViewDataset::dims() const {
    std::vector<std::size_t> d;
    for (const auto& v : views) d.push_back(v.cols());
    return d;
}

void validate(const MultiViewDataset& ds) {
    if (ds.views.empty()) throw PreconditionError("dataset has no views");
    const std::size_t n = ds.views[0].rows();
    for (std::size_t m = 0; m < ds.views.size(); ++m) {
        if (ds.views[m].cols() == 0)
            throw PreconditionError("view " + std::to_string(m) + " has zero columns");
        if (ds.views[m].rows() != n)
            throw DimensionError("view " + std::to_string(m) + " has " +
                                 std::to_string(ds.views[m].rows()) + " rows but view 0 has " +
                                 std::to_string(n));
    }
    if (ds.labels) {
        if (ds.labels->size() != n)
            throw DimensionError("labels has " + std::to_string(ds.labels->size()) +
                                 " entries but views have " + std::to_string(n) + " rows");
        for (int l : *ds.labels)
            if (l < 0 || static_cast<std::size_t>(l) >= ds.clusters)
                throw PreconditionError("label " + std::to_string(l) + " outside [0, " +
                                        std::to_string(ds.clusters) + ")");
    }
}

void validate(const SyntheticConfig& cfg) {
    if (cfg.samples == 0) throw PreconditionError("synthetic: samples must be >= 1");
    if (cfg.views == 0) throw PreconditionError("synthetic: views must be >= 1");
    if (cfg.clusters < 2) throw PreconditionError("synthetic: clusters must be >= 2");
    if (cfg.common_dim == 0) throw PreconditionError("synthetic: common_dim must be >= 1");
    if (cfg.view_dims.size() != cfg.views)
        throw PreconditionError("synthetic: view_dims lists " +
                                std::to_string(cfg.view_dims.size()) + " dims for " +
                                std::to_string(cfg.views) + " views");
    for (std::size_t d : cfg.view_dims)
        if (d == 0) throw PreconditionError("synthetic: every view dim must be >= 1");
    if (!(cfg.private_strength >= 0.0)) throw PreconditionError("synthetic: private_strength < 0");
    if (!(cfg.noise_sigma >= 0.0)) throw PreconditionError("synthetic: noise_sigma < 0");
    if (!(cfg.cluster_separation >= 0.0))
        throw PreconditionError("synthetic: cluster_separation < 0");
    if (!(cfg.cluster_jitter >= 0.0)) throw PreconditionError("synthetic: cluster_jitter < 0");
}

MultiViewDataset generate_synthetic(const SyntheticConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.samples;
    const std::size_t k = cfg.clusters;
    // Separate streams so that, for instance, changing private_strength
    // leaves the labels and the common codes untouched.
    Rng root(cfg.seed);
    Rng label_rng = root.fork();
    Rng common_rng = root.fork();
    Rng mixer_rng = root.fork();
    Rng private_rng = root.fork();
    Rng noise_rng = root.fork();

    Labels labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % k);
    label_rng.shuffle(std::span<int>(labels));

    Tensor2D centres(k, cfg.common_dim);
    for (double& v : centres.values()) v = cfg.cluster_separation * common_rng.normal();
    Tensor2D common(n, cfg.common_dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < cfg.common_dim; ++t)
            common(i, t) = centres(labels[i], t) + cfg.cluster_jitter * common_rng.normal();

    MultiViewDataset ds;
    ds.clusters = k;
    const std::size_t in_dim = cfg.common_dim + cfg.private_dim;
    for (std::size_t m = 0; m < cfg.views; ++m) {
        const std::size_t d = cfg.view_dims[m];
        Tensor2D first(d, in_dim), second(d, d);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(d));
        for (double& v : first.values()) v = s1 * mixer_rng.normal();
        for (double& v : second.values()) v = s2 * mixer_rng.normal();

        Tensor2D code(n, in_dim);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < cfg.common_dim; ++t) code(i, t) = common(i, t);
            for (std::size_t t = 0; t < cfg.private_dim; ++t)
                code(i, cfg.common_dim + t) = cfg.private_strength * private_rng.normal();
        }
        Tensor2D hidden = matmul_nt(code, first);
        for (double& v : hidden.values()) v = std::tanh(v);
        Tensor2D x = matmul_nt(hidden, second);
        for (double& v : x.values()) v += cfg.noise_sigma * noise_rng.normal();
        ds.views.push_back(std::move(x));
    }
    ds.labels = std::move(labels);
    return ds;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& p) {
    out.flush();
    if (!out) throw IoError("write failed for " + p.string());
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::size_t parse_count(const std::string& text, const std::string& where) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw IoError(where + ": expected a non-negative integer, got '" + text + "'");
    return v;
}

Tensor2D read_view(const fs::path& p, std::size_t expected_cols) {
    const auto lines = read_lines(p);
    Tensor2D t(lines.size(), expected_cols);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const std::string& line = lines[r];
        const char* cur = line.data();
        const char* end = line.data() + line.size();
        std::size_t c = 0;
        while (true) {
            double v = 0.0;
            const auto res = std::from_chars(cur, end, v);
            const std::string where = p.filename().string() + " line " + std::to_string(r + 1);
            if (res.ec != std::errc()) throw IoError(where + ": malformed number");
            if (!std::isfinite(v)) throw IoError(where + ": non-finite value");
            if (c >= expected_cols)
                throw IoError(where + ": more than " + std::to_string(expected_cols) + " values");
            t(r, c++) = v;
            cur = res.ptr;
            if (cur == end) break;
            if (*cur != ',') throw IoError(where + ": expected ',' after value " + std::to_string(c));
            ++cur;
        }
        if (c != expected_cols)
            throw IoError(p.filename().string() + " line " + std::to_string(r + 1) + ": " +
                          std::to_string(c) + " values, expected " + std::to_string(expected_cols));
    }
    return t;
}

}  // namespace

void save_dataset(const MultiViewDataset& ds, const fs::path& dir) {
    validate(ds);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    {
        const fs::path p = dir / "manifest.txt";
        auto out = open_out(p);
        out << "views=" << ds.num_views() << '\n'
            << "samples=" << ds.num_samples() << '\n'
            << "clusters=" << ds.clusters << '\n';
        for (std::size_t m = 0; m < ds.num_views(); ++m)
            out << "dim_" << m << '=' << ds.views[m].cols() << '\n';
        finish(out, p);
    }
    for (std::size_t m = 0; m < ds.num_views(); ++m) {
        const fs::path p = dir / ("view_" + std::to_string(m) + ".csv");
        auto out = open_out(p);
        const Tensor2D& v = ds.views[m];
        std::string line;
        for (std::size_t r = 0; r < v.rows(); ++r) {
            line.clear();
            for (std::size_t c = 0; c < v.cols(); ++c) {
                if (c) line += ',';
                line += format_double(v(r, c));
            }
            line += '\n';
            out << line;
        }
        finish(out, p);
    }
    const fs::path lp = dir / "labels.csv";
    if (ds.labels) {
        write_labels(*ds.labels, lp);
    } else {
        fs::remove(lp, ec);
    }
}

void write_labels(std::span<const int> labels, const fs::path& path) {
    auto out = open_out(path);
    for (int l : labels) out << l << '\n';
    finish(out, path);
}

Labels read_labels(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("missing " + path.string());
    const std::string name = path.filename().string();
    Labels labels;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        int v = 0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc() || res.ptr != line.data() + line.size())
            throw IoError(name + " line " + std::to_string(line_no) + ": malformed label '" +
                          line + "'");
        labels.push_back(v);
    }
    return labels;
}

MultiViewDataset load_dataset(const fs::path& dir) {
    const fs::path mp = dir / "manifest.txt";
    if (!fs::exists(mp)) throw IoError("missing " + mp.string());
    std::map<std::string, std::string> kv;
    for (const auto& line : read_lines(mp)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("manifest.txt: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("manifest.txt: missing key '" + key + "'");
        return parse_count(it->second, "manifest.txt key " + key);
    };
    const std::size_t views = get("views");
    const std::size_t samples = get("samples");
    MultiViewDataset ds;
    ds.clusters = get("clusters");
    if (views == 0) throw IoError("manifest.txt: views must be >= 1");

    for (std::size_t m = 0; m < views; ++m) {
        const std::size_t d = get("dim_" + std::to_string(m));
        const fs::path vp = dir / ("view_" + std::to_string(m) + ".csv");
        if (!fs::exists(vp)) throw IoError("missing " + vp.string());
        ds.views.push_back(read_view(vp, d));
    }
    for (std::size_t m = 0; m < views; ++m) {
        if (ds.views[m].rows() != ds.views[0].rows())
            throw IoError("view_" + std::to_string(m) + ".csv has " +
                          std::to_string(ds.views[m].rows()) + " rows but view_0.csv has " +
                          std::to_string(ds.views[0].rows()));
    }
    if (ds.views[0].rows() != samples)
        throw IoError("manifest.txt declares " + std::to_string(samples) +
                      " samples but view_0.csv has " + std::to_string(ds.views[0].rows()) +
                      " rows");

    const fs::path lp = dir / "labels.csv";
    if (fs::exists(lp)) {
        Labels labels = read_labels(lp);
        if (labels.size() != samples)
            throw IoError("labels.csv has " + std::to_string(labels.size()) +
                          " entries but the views have " + std::to_string(samples) + " rows");
        ds.labels = std::move(labels);
    }
    try {
        validate(ds);
    } catch (const Error& e) {
        throw IoError(std::string("invalid dataset in ") + dir.string() + ": " + e.what());
    }
    return ds;
}

std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t n, std::size_t batch_size,
                                                     Rng& rng) {
    if (batch_size == 0 || batch_size > n)
        throw PreconditionError("minibatch_iter: batch size " + std::to_string(batch_size) +
                                " outside [1, " + std::to_string(n) + "]");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

std::vector<Tensor2D> gather_batch(std::span<const Tensor2D> views,
                                   std::span<const std::size_t> index) {
    std::vector<Tensor2D> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back(gather_rows(v, index));
    return out;
}

}  // namespace mvclust
