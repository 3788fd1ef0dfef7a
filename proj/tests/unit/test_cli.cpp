#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qlm/checkpoint.hpp"
#include "qlm/cli.hpp"
#include "support.hpp"

using namespace qlm;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result qlm_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::vector<std::string> train_args(const fs::path& dir, int epochs) {
    return {"train", "--config", test::fixture("toy.cfg").string(), "--out-dir", dir.string(), "--max-epochs",
            std::to_string(epochs), "--measurements", "8"};
}

}  // namespace

TEST_CASE("train writes the manifest, log, checkpoints and metrics") {
    const auto dir = test::scratch_dir("cli_train");
    const Result r = qlm_cli(train_args(dir, 3));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    for (const char* f : {"manifest.json", "resolved.cfg", "log.jsonl", "last.ckpt", "best.ckpt", "metrics.json", "metrics.csv"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    CHECK(lines(dir / "log.jsonl").size() == 3);
    const auto manifest = read_json(dir / "manifest.json");
    CHECK(manifest["command"] == "train");
    CHECK(manifest["seed"] == 0);
    CHECK(manifest["config"]["measurements"] == "8");
    CHECK(manifest["config"]["max_epochs"] == "3");
    CHECK(fs::path(manifest["config"]["train"].get<std::string>()).is_absolute());
    const auto metrics = read_json(dir / "metrics.json");
    CHECK(metrics["status"] == "ok");
    CHECK(metrics["epochs"] == 3);
    CHECK(metrics["dev_map"].is_number());
    CHECK(metrics["test_map"].is_number());
    CHECK(r.out.find("dev MAP") != std::string::npos);

    const Checkpoint ck = load_checkpoint(dir / "last.ckpt");
    CHECK(ck.meta.at("epoch") == "3");
    CHECK(ck.params.config.measurements == 8);
}

TEST_CASE("resolved.cfg reproduces the run configuration") {
    const auto dir = test::scratch_dir("cli_resolved");
    REQUIRE(qlm_cli(train_args(dir, 1)).code == 0);
    RunConfig a;
    load_config_file(a, dir / "resolved.cfg");
    RunConfig b;
    load_config_file(b, test::fixture("toy.cfg"));
    b.set("max_epochs", "1");
    b.set("measurements", "8");
    auto ea = a.entries(), eb = b.entries();
    for (auto* e : {&ea, &eb}) {
        std::erase_if(*e, [](const auto& kv) { return kv.first == "vocab_size"; });
    }
    CHECK(ea == eb);
}

TEST_CASE("config precedence is file, then --set, then named flags") {
    const auto dir = test::scratch_dir("cli_precedence");
    auto args = train_args(dir, 1);
    args.insert(args.end(), {"--set", "measurements=6", "--set", "dim=3", "--seed", "4"});
    REQUIRE(qlm_cli(args).code == 0);
    const auto m = read_json(dir / "manifest.json");
    CHECK(m["config"]["measurements"] == "8");
    CHECK(m["config"]["dim"] == "3");
    CHECK(m["seed"] == 4);
}

TEST_CASE("a missing data file fails with its path") {
    const auto dir = test::scratch_dir("cli_missing");
    const Result r = qlm_cli({"train", "--train", "/no/such/train.tsv", "--out-dir", dir.string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("/no/such/train.tsv") != std::string::npos);
    const Result c = qlm_cli({"train", "--config", "/no/such/run.cfg"});
    CHECK(c.code != 0);
    CHECK(c.err.find("/no/such/run.cfg") != std::string::npos);
    const Result k = qlm_cli({"train", "--config", test::fixture("toy.cfg").string(), "--set", "colour=blue"});
    CHECK(k.code != 0);
    CHECK(k.err.find("colour") != std::string::npos);
    CHECK(qlm_cli({"frobnicate"}).code != 0);
}

TEST_CASE("the same seed gives the same dev MAP") {
    const auto a = test::scratch_dir("cli_seed_a");
    const auto b = test::scratch_dir("cli_seed_b");
    REQUIRE(qlm_cli(train_args(a, 3)).code == 0);
    REQUIRE(qlm_cli(train_args(b, 3)).code == 0);
    CHECK(read_json(a / "metrics.json")["dev_map"] == read_json(b / "metrics.json")["dev_map"]);
}

TEST_CASE("train --resume continues to the same parameters") {
    const auto full = test::scratch_dir("cli_full");
    const auto part = test::scratch_dir("cli_part");
    REQUIRE(qlm_cli(train_args(full, 4)).code == 0);
    REQUIRE(qlm_cli(train_args(part, 2)).code == 0);
    auto args = train_args(part, 4);
    args.push_back("--resume");
    const Result r = qlm_cli(args);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("resuming from epoch 2") != std::string::npos);
    CHECK(lines(part / "log.jsonl").size() == 4);
    const Checkpoint x = load_checkpoint(full / "last.ckpt");
    const Checkpoint y = load_checkpoint(part / "last.ckpt");
    CHECK(x.params.embedding.amplitudes == y.params.embedding.amplitudes);
    CHECK(x.params.pipelines[0].bank.vectors == y.params.pipelines[0].bank.vectors);
    CHECK(read_json(full / "metrics.json")["dev_map"] == read_json(part / "metrics.json")["dev_map"]);
}

TEST_CASE("eval scores a checkpoint on the requested split") {
    const auto dir = test::scratch_dir("cli_eval");
    REQUIRE(qlm_cli(train_args(dir, 2)).code == 0);
    const Result r = qlm_cli({"eval", "--checkpoint", (dir / "best.ckpt").string(), "--config",
                              test::fixture("toy.cfg").string(), "--split", "dev", "--out-dir", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("dev MAP") != std::string::npos);
    const auto report = lines(dir / "eval_dev.txt");
    REQUIRE(report.size() == 4 + 3);
    std::ostringstream expect;
    expect << "MAP " << std::fixed << std::setprecision(6) << read_json(dir / "metrics.json")["dev_map"].get<double>();
    CHECK(report[0] == expect.str());
    CHECK(qlm_cli({"eval", "--config", test::fixture("toy.cfg").string()}).code != 0);
}

TEST_CASE("sweep runs every grid point and skips finished ones") {
    const auto dir = test::scratch_dir("cli_sweep");
    const std::vector<std::string> args{"sweep", "--config", test::fixture("toy.cfg").string(), "--out-dir",
                                        dir.string(), "--max-epochs", "2", "--measurements", "8",
                                        "--grid", "learning_rate=0.1|0.5"};
    const Result r = qlm_cli(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto summary = lines(dir / "summary.csv");
    REQUIRE(summary.size() == 3);
    CHECK(summary[0] == "point,learning_rate,status,dev_map,dev_mrr,test_map,test_mrr,train_map,epochs");
    CHECK(read_json(dir / "point_000" / "result.json")["status"] == "ok");
    CHECK(read_json(dir / "point_001" / "manifest.json")["config"]["learning_rate"] == "0.5");

    const Result again = qlm_cli(args);
    CHECK(again.code == 0);
    CHECK(again.out.find("complete, skipping") != std::string::npos);
    CHECK(lines(dir / "summary.csv") == summary);
    CHECK(qlm_cli({"sweep", "--config", test::fixture("toy.cfg").string(), "--out-dir", dir.string(), "--grid",
                   "colour=red"})
              .code != 0);
}

TEST_CASE("ablate builds a variant by seed table") {
    const auto dir = test::scratch_dir("cli_ablate");
    const Result r = qlm_cli({"ablate", "--config", test::fixture("toy.cfg").string(), "--out-dir", dir.string(),
                              "--max-epochs", "2", "--measurements", "8", "--variants", "EE,SE", "--seeds", "0-1"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto table = lines(dir / "ablation.csv");
    REQUIRE(table.size() == 3);
    CHECK(table[0] == "variant,runs,failed,map_mean,map_std,mrr_mean,mrr_std,train_map_mean,train_map_std,params,flops");
    CHECK(table[1].rfind("EE,2,0,", 0) == 0);
    CHECK(table[2].rfind("SE,2,0,", 0) == 0);
    for (const char* v : {"EE", "SE"}) {
        for (const char* s : {"seed_0", "seed_1"}) CHECK(fs::exists(dir / v / s / "result.json"));
    }
    CHECK(r.out.find("eval split test") != std::string::npos);
}

TEST_CASE("ablate --count-only reports counts without training") {
    const auto dir = test::scratch_dir("cli_count");
    const Result r = qlm_cli({"ablate", "--config", test::fixture("toy.cfg").string(), "--out-dir", dir.string(),
                              "--variants", "ME", "--variant-override", "ME:dim=6", "--ref-lengths", "5,7",
                              "--count-only"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto table = lines(dir / "ablation.csv");
    REQUIRE(table.size() == 2);
    const QACorpus c = load_corpus(test::fixture("toy_train.tsv"), "", "");
    const auto v = static_cast<std::int64_t>(c.vocab.size());
    // Embedding plus complex bank rows of dimension D.
    const std::int64_t params = v * 6 * 2 + 32 * 6 * 2;
    CHECK(table[1].rfind("ME,0,0,,,,,,," + std::to_string(params) + ",", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "ME"));
    CHECK(qlm_cli({"ablate", "--config", test::fixture("toy.cfg").string(), "--seeds", "5-2", "--count-only"}).code != 0);
}

TEST_CASE("inspect-entropy and inspect-neighbors write their tables") {
    const auto dir = test::scratch_dir("cli_inspect");
    REQUIRE(qlm_cli(train_args(dir, 2)).code == 0);
    const std::string ckpt = (dir / "best.ckpt").string();
    const Result e = qlm_cli({"inspect-entropy", "--checkpoint", ckpt, "--config", test::fixture("toy.cfg").string(),
                              "--top-k", "5", "--bottom-k", "5", "--profile-limit", "3"});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    const auto ranking = lines(dir / "entropy_n2_questions_train.csv");
    CHECK(ranking.size() == 11);
    CHECK(ranking[0] == "rank,kind,gram,entropy,count");
    const auto profile = lines(dir / "entropy_n2_questions_train_profile.csv");
    CHECK(profile[0] == "sentence,left,right,entropy");
    CHECK(profile.back().rfind("2,", 0) == 0);

    const Result n = qlm_cli({"inspect-neighbors", "--checkpoint", ckpt, "--query", "capital", "--k", "3",
                              "--out-dir", dir.string()});
    REQUIRE_MESSAGE(n.code == 0, n.err);
    const auto table = lines(dir / "neighbors.csv");
    REQUIRE(table.size() == 4);
    for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].rfind("capital,", 0) == 0);
    CHECK(table[1].find(",capital,") == std::string::npos);

    const Result g = qlm_cli({"inspect-neighbors", "--checkpoint", ckpt, "--config", test::fixture("toy.cfg").string(),
                              "--level", "gram", "--query", "the capital", "--k", "2"});
    CHECK_MESSAGE(g.code == 0, g.err);
    CHECK(qlm_cli({"inspect-entropy", "--checkpoint", ckpt, "--split", "test"}).code != 0);
}

TEST_CASE("--version prints the code version") {
    const Result r = qlm_cli({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find(std::string(code_version())) != std::string::npos);
}
