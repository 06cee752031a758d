// mvclust: generate | train | evaluate | ablate | gradcheck
//
// Exit codes: 0 success, 1 numerical or training failure, 2 usage or
// validation error (including I/O).

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "mvclust/checkpoint.hpp"
#include "mvclust/config.hpp"
#include "mvclust/data.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/metrics.hpp"
#include "mvclust/trainer.hpp"
#include "mvclust/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mvclust;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

RunConfig effective_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
    for (const auto& o : overrides) apply_setting(cfg, o);
    if (const char* env = std::getenv("MVCLUST_SEED")) {
        try {
            apply_setting(cfg, std::string("seed=") + env);
        } catch (const PreconditionError&) {
            throw PreconditionError(std::string("MVCLUST_SEED is not a valid seed: '") + env + "'");
        }
    }
    validate(cfg.synthetic);
    validate(cfg.train);
    return cfg;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_file(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    return out;
}

json metrics_json(const MetricSet& m) {
    return json{{"acc", m.acc}, {"nmi", m.nmi}, {"pur", m.pur}};
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::uint64_t parse_seed(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw PreconditionError("invalid seed '" + s + "'");
    return v;
}

int cmd_generate(const std::string& config, const std::vector<std::string>& overrides,
                 const fs::path& out) {
    const RunConfig cfg = effective_config(config, overrides);
    const MultiViewDataset ds = generate_synthetic(cfg.synthetic);
    make_dir(out);
    save_dataset(ds, out);
    std::cout << "N=" << ds.num_samples() << " M=" << ds.num_views() << " K=" << ds.clusters
              << " -> " << out.string() << '\n';
    return 0;
}

int cmd_train(const std::string& config, const std::vector<std::string>& overrides,
              const fs::path& data, const fs::path& out) {
    const RunConfig cfg = effective_config(config, overrides);
    const MultiViewDataset ds = load_dataset(data);
    make_dir(out);
    {
        auto f = open_file(out / "config.txt");
        f << to_text(cfg);
    }
    const PipelineResult r = run_pipeline(ds, cfg.train);
    save_checkpoint(r.model, out / "model.ckpt");
    {
        auto f = open_file(out / "log.csv");
        write_log_csv(r.log, f);
    }
    write_labels(r.labels, out / "labels.txt");
    if (r.metrics) {
        json j = metrics_json(*r.metrics);
        j["seed"] = cfg.train.seed;
        j["variant"] = "D";
        auto f = open_file(out / "metrics.json");
        f << j.dump() << '\n';
        std::cout << j.dump() << '\n';
    } else {
        std::cout << "no ground truth in " << data.string() << "; metrics omitted\n";
    }
    return 0;
}

int cmd_evaluate(const fs::path& pred, const fs::path& truth) {
    const Labels p = read_labels(pred);
    const Labels t = read_labels(truth);
    std::cout << metrics_json(evaluate(p, t)).dump() << '\n';
    return 0;
}

int cmd_ablate(const std::string& config, const std::vector<std::string>& overrides,
               const fs::path& data, const std::string& variants_arg,
               const std::string& seeds_arg, const std::string& csv_path) {
    const RunConfig cfg = effective_config(config, overrides);
    const auto variants = split(variants_arg);
    if (variants.empty()) throw PreconditionError("no variants given");
    for (const auto& v : variants)
        if (!is_variant(v))
            throw PreconditionError("unknown variant '" + v + "' (expected one of A-D, a-d)");
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split(seeds_arg)) seeds.push_back(parse_seed(s));
    if (seeds.empty()) throw PreconditionError("no seeds given");

    const MultiViewDataset ds = load_dataset(data);
    std::ofstream csv;
    if (!csv_path.empty()) {
        csv = open_file(csv_path);
        csv << "variant,seed,acc,nmi,pur\n";
    }
    std::cout << std::left << std::setw(9) << "variant" << std::setw(8) << "seed" << std::setw(10)
              << "acc" << std::setw(10) << "nmi" << "pur\n";
    std::cout << std::fixed << std::setprecision(4);
    auto row = [&](const std::string& v, const std::string& seed, const MetricSet& m) {
        std::cout << std::setw(9) << v << std::setw(8) << seed << std::setw(10) << m.acc
                  << std::setw(10) << m.nmi << m.pur << '\n';
        if (csv.is_open())
            csv << v << ',' << seed << ',' << format_double(m.acc) << ',' << format_double(m.nmi)
                << ',' << format_double(m.pur) << '\n';
    };
    for (const auto& v : variants) {
        MetricSet sum{0.0, 0.0, 0.0};
        for (std::uint64_t seed : seeds) {
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            const AblationResult r = run_ablation(ds, tc, v);
            row(v, std::to_string(seed), r.metrics);
            sum.acc += r.metrics.acc;
            sum.nmi += r.metrics.nmi;
            sum.pur += r.metrics.pur;
        }
        const double n = static_cast<double>(seeds.size());
        row(v, "mean", {sum.acc / n, sum.nmi / n, sum.pur / n});
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances, const std::string& corrupt) {
    const auto results =
        run_gradcheck_suite(seed, instances, corrupt.empty() ? std::nullopt : std::optional(corrupt));
    bool ok = true;
    std::cout << std::scientific << std::setprecision(2);
    for (const auto& r : results) {
        const bool pass = r.report.passed();
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << r.loss << " instance " << r.instance
                  << " max_rel_err " << r.report.max_rel_error() << '\n';
        if (!pass)
            for (const auto& e : r.report.entries)
                if (!e.passed)
                    std::cout << "  " << r.loss << ": " << e.name << " rel_err " << e.max_rel_error
                              << '\n';
    }
    std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (tol 1e-4, seed " << seed
              << ")\n";
    return ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view contrastive clustering"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    std::string out, data, pred, truth, variants = "A,B,C,D", seeds = "0,1,2,3,4", csv_path,
                                         corrupt;
    std::uint64_t seed = 0;
    std::size_t instances = 5;

    auto* gen = app.add_subcommand("generate", "Write a synthetic multi-view dataset");
    gen->add_option("-c,--config", config, "key=value config file");
    gen->add_option("-o,--out", out, "Output dataset directory")->required();
    gen->add_option("overrides", overrides, "key=value overrides");

    auto* train = app.add_subcommand("train", "Train on a dataset directory");
    train->add_option("-c,--config", config, "key=value config file");
    train->add_option("-d,--data", data, "Dataset directory")->required();
    train->add_option("-o,--out", out, "Output directory")->required();
    train->add_option("overrides", overrides, "key=value overrides");

    auto* eval = app.add_subcommand("evaluate", "ACC/NMI/PUR of predicted labels");
    eval->add_option("pred", pred, "Predicted labels file")->required();
    eval->add_option("truth", truth, "Ground-truth labels file")->required();

    auto* ablate = app.add_subcommand("ablate", "Run ablation variants over seeds");
    ablate->add_option("-c,--config", config, "key=value config file");
    ablate->add_option("-d,--data", data, "Dataset directory")->required();
    ablate->add_option("--variants", variants, "Comma-separated subset of A-D, a-d")
        ->capture_default_str();
    ablate->add_option("--seeds", seeds, "Comma-separated seeds")->capture_default_str();
    ablate->add_option("--csv", csv_path, "CSV output: variant,seed,acc,nmi,pur");
    ablate->add_option("overrides", overrides, "key=value overrides");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every objective");
    gc->add_option("--seed", seed, "Instance seed")->capture_default_str();
    gc->add_option("--instances", instances, "Random instances")->capture_default_str();
    gc->add_option("--corrupt", corrupt, "Test hook: corrupt this loss's gradient")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) return cmd_generate(config, overrides, out);
        if (*train) return cmd_train(config, overrides, data, out);
        if (*eval) return cmd_evaluate(pred, truth);
        if (*ablate) return cmd_ablate(config, overrides, data, variants, seeds, csv_path);
        if (*gc) return cmd_gradcheck(seed, instances, corrupt);
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
