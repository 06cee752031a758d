#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mvclust/config.hpp"
#include "mvclust/data.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("mvclust_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Cleanup {
    ~Cleanup() { fs::remove_all(work_dir()); }
} cleanup;

Run cli(const std::string& args, const std::string& env = "") {
    const fs::path log = work_dir() / "stdout.txt";
    const std::string cmd =
        env + " '" + std::string(MVCLUST_CLI_PATH) + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    r.out.assign(std::istreambuf_iterator<char>(in), {});
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// A small problem so each training run takes well under a second.
const char* kSmallConfig =
    "samples=80\nclusters=3\nview_dims=6,5\ncommon_dim=2\nprivate_dim=2\n"
    "pretrain_epochs=3\ncontrastive_epochs=3\nfinetune_epochs=3\nbatch_size=32\n"
    "encoder_hidden=8\nlatent_dim=4\nhigh_dim=3\nkmeans_restarts=2\nseed=3\n";

fs::path small_setup() {
    const fs::path cfg = work_dir() / "small.cfg";
    const fs::path data = work_dir() / "small_data";
    if (!fs::exists(data / "manifest.txt")) {
        write(cfg, kSmallConfig);
        REQUIRE(cli("generate -c '" + cfg.string() + "' -o '" + data.string() + "'").code == 0);
    }
    return data;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("generate writes the documented files deterministically") {
    const fs::path a = work_dir() / "gen_a", b = work_dir() / "gen_b";
    const Run r = cli("generate -o " + q(a));
    CHECK(r.code == 0);
    CHECK(r.out.find("N=1000 M=2 K=4") != std::string::npos);
    for (const char* f : {"view_0.csv", "view_1.csv", "labels.csv", "manifest.txt"})
        CHECK(fs::exists(a / f));
    CHECK(cli("generate -o " + q(b)).code == 0);
    for (const char* f : {"view_0.csv", "view_1.csv", "labels.csv", "manifest.txt"})
        CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("generate into an unwritable path fails with exit code 2") {
    const fs::path file = work_dir() / "plain_file";
    write(file, "x");
    const Run r = cli("generate -o " + q(file / "sub"));
    CHECK(r.code == 2);
    CHECK(r.out.find("error") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("train -d nowhere").code == 2);
    CHECK(cli("generate -o " + q(work_dir() / "x") + " bogus_key=1").code == 2);
    CHECK(cli("generate -o " + q(work_dir() / "x") + " samples=abc").code == 2);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("train writes checkpoint, log, metrics, labels and config echo") {
    const fs::path data = small_setup();
    const fs::path cfg = work_dir() / "small.cfg";
    const fs::path out1 = work_dir() / "train1", out2 = work_dir() / "train2";
    const Run r1 = cli("train -c " + q(cfg) + " -d " + q(data) + " -o " + q(out1));
    REQUIRE(r1.code == 0);
    for (const char* f : {"model.ckpt", "log.csv", "metrics.json", "labels.txt", "config.txt"})
        CHECK(fs::exists(out1 / f));

    const std::string metrics = slurp(out1 / "metrics.json");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1);
    const json j = json::parse(metrics);
    for (const char* k : {"acc", "nmi", "pur", "seed", "variant"}) CHECK(j.contains(k));
    CHECK(j["seed"] == 3);
    CHECK(j["variant"] == "D");
    CHECK(mvclust::read_labels(out1 / "labels.txt").size() == 80);
    CHECK(mvclust::parse_config(slurp(out1 / "config.txt")) ==
          mvclust::parse_config(kSmallConfig));

    REQUIRE(cli("train -c " + q(cfg) + " -d " + q(data) + " -o " + q(out2)).code == 0);
    CHECK(slurp(out1 / "labels.txt") == slurp(out2 / "labels.txt"));
    CHECK(slurp(out1 / "log.csv") == slurp(out2 / "log.csv"));
    CHECK(slurp(out1 / "model.ckpt") == slurp(out2 / "model.ckpt"));
}

TEST_CASE("overrides and MVCLUST_SEED change the effective config") {
    const fs::path data = small_setup();
    const fs::path cfg = work_dir() / "small.cfg";
    const fs::path out = work_dir() / "train_env";
    const Run r = cli("train -c " + q(cfg) + " -d " + q(data) + " -o " + q(out) + " finetune_epochs=1",
                      "MVCLUST_SEED=11");
    REQUIRE(r.code == 0);
    const auto echoed = mvclust::parse_config(slurp(out / "config.txt"));
    CHECK(echoed.train.seed == 11);
    CHECK(echoed.train.finetune_epochs == 1);
    CHECK(json::parse(slurp(out / "metrics.json"))["seed"] == 11);
    CHECK(cli("train -c " + q(cfg) + " -d " + q(data) + " -o " + q(out), "MVCLUST_SEED=abc").code == 2);
}

TEST_CASE("train without ground truth omits metrics but writes labels") {
    const fs::path data = small_setup();
    const fs::path unlabeled = work_dir() / "unlabeled";
    fs::create_directories(unlabeled);
    for (const char* f : {"manifest.txt", "view_0.csv", "view_1.csv"})
        fs::copy_file(data / f, unlabeled / f, fs::copy_options::overwrite_existing);
    const fs::path out = work_dir() / "train_unlabeled";
    const Run r = cli("train -c " + q(work_dir() / "small.cfg") + " -d " + q(unlabeled) + " -o " + q(out));
    REQUIRE(r.code == 0);
    CHECK_FALSE(fs::exists(out / "metrics.json"));
    CHECK(mvclust::read_labels(out / "labels.txt").size() == 80);
}

TEST_CASE("train rejects datasets the model cannot use") {
    const fs::path data = small_setup();
    const fs::path single = work_dir() / "single_view";
    fs::create_directories(single);
    std::string manifest = slurp(data / "manifest.txt");
    manifest.replace(manifest.find("views=2"), 7, "views=1");
    write(single / "manifest.txt", manifest);
    fs::copy_file(data / "view_0.csv", single / "view_0.csv", fs::copy_options::overwrite_existing);
    const Run r = cli("train -c " + q(work_dir() / "small.cfg") + " -d " + q(single) + " -o " +
                      q(work_dir() / "train_single"));
    CHECK(r.code == 2);
    CHECK(r.out.find("2 views") != std::string::npos);
    CHECK(cli("train -d " + q(work_dir() / "missing") + " -o " + q(work_dir() / "t")).code == 2);
}

TEST_CASE("evaluate prints metrics JSON") {
    write(work_dir() / "t.txt", "0\n0\n1\n1\n");
    write(work_dir() / "p_same.txt", "0\n0\n1\n1\n");
    write(work_dir() / "p_perm.txt", "1\n1\n0\n0\n");
    write(work_dir() / "p_ind.txt", "0\n1\n0\n1\n");
    write(work_dir() / "p_short.txt", "0\n1\n");

    Run r = cli("evaluate " + q(work_dir() / "p_same.txt") + " " + q(work_dir() / "t.txt"));
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
    json j = json::parse(r.out);
    CHECK(j["acc"] == 1.0);
    CHECK(j["nmi"] == 1.0);
    CHECK(j["pur"] == 1.0);

    r = cli("evaluate " + q(work_dir() / "p_perm.txt") + " " + q(work_dir() / "t.txt"));
    CHECK(json::parse(r.out)["acc"] == 1.0);
    r = cli("evaluate " + q(work_dir() / "p_ind.txt") + " " + q(work_dir() / "t.txt"));
    CHECK(json::parse(r.out)["nmi"] == 0.0);
    r = cli("evaluate " + q(work_dir() / "p_short.txt") + " " + q(work_dir() / "t.txt"));
    CHECK(r.code == 2);
}

TEST_CASE("ablate tables, CSV and variant validation") {
    const fs::path data = small_setup();
    const fs::path cfg = work_dir() / "small.cfg";
    CHECK(cli("ablate -c " + q(cfg) + " -d " + q(data) + " --variants D,Z --seeds 3").code == 2);

    const fs::path csv = work_dir() / "ablate.csv";
    const Run r = cli("ablate -c " + q(cfg) + " -d " + q(data) + " --variants D --seeds 3 --csv " + q(csv));
    REQUIRE(r.code == 0);
    const std::string table = slurp(csv);
    std::istringstream in(table);
    std::string header, row, mean;
    std::getline(in, header);
    std::getline(in, row);
    std::getline(in, mean);
    CHECK(header == "variant,seed,acc,nmi,pur");
    CHECK(row.starts_with("D,3,"));
    CHECK(mean.starts_with("D,mean,"));
    CHECK(row.substr(4) == mean.substr(7));

    // Variant D with the train seed reproduces cmd_train's numbers.
    REQUIRE(cli("train -c " + q(cfg) + " -d " + q(data) + " -o " + q(work_dir() / "train_d")).code == 0);
    const json j = json::parse(slurp(work_dir() / "train_d" / "metrics.json"));
    std::istringstream fields(row);
    std::string v, s, acc, nmi;
    std::getline(fields, v, ',');
    std::getline(fields, s, ',');
    std::getline(fields, acc, ',');
    std::getline(fields, nmi, ',');
    CHECK(std::stod(acc) == j["acc"].get<double>());
    CHECK(std::stod(nmi) == j["nmi"].get<double>());
}

TEST_CASE("gradcheck command") {
    const Run ok = cli("gradcheck");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("gradcheck passed") != std::string::npos);
    for (int seed = 1; seed < 5; ++seed)
        CHECK(cli("gradcheck --seed " + std::to_string(seed)).code == 0);
    const Run bad = cli("gradcheck --corrupt L_Q --instances 1");
    CHECK(bad.code == 1);
    CHECK(bad.out.find("FAIL L_Q") != std::string::npos);
    CHECK(bad.out.find("FAIL L_H") == std::string::npos);
    CHECK(cli("gradcheck --corrupt nope").code == 2);
}
