#include <doctest.h>

#include <map>
#include <sstream>

#include "cli.hpp"
#include "influence/serialize.hpp"
#include "support.hpp"

using influence::cli::run_cli;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err, [env](const std::string& k) -> std::optional<std::string> {
        auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    });
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return (fixtures::dir() / name).string(); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("score prints a json report with five scores") {
    const auto r = cli({"score", "--dataset", fx("ablation_dataset.jsonl"), "--id", "q001", "--mock", "--json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["report"]["per_doc"].size() == 5);
    CHECK(j["report"]["ranking"].size() == 5);
    CHECK(j["meta"]["contexts_consumed"] == 6);
    CHECK(j["meta"]["budget"] == 6);
}

TEST_CASE("remote mode without a key names the variable") {
    const auto r = cli({"score", "--dataset", fx("ablation_dataset.jsonl"), "--id", "q001", "--llm-provider",
                        "remote", "--llm-endpoint", "http://127.0.0.1:1/v1/chat/completions", "--llm-model", "m"});
    CHECK(r.code == 2);
    CHECK(r.err.find("INFLUENCE_LLM_API_KEY") != std::string::npos);
}

TEST_CASE("provider failures exit 3") {
    const auto dir = fixtures::scratch("cli-remote");
    influence::write_text_file(dir / "c.json", R"({"retry": {"attempts": 1, "backoff_ms": 1}})");
    const auto r = cli({"score", "--config", (dir / "c.json").string(), "--dataset", fx("ablation_dataset.jsonl"),
                        "--id", "q001", "--llm-provider", "remote", "--llm-endpoint",
                        "http://127.0.0.1:1/v1/chat/completions", "--llm-model", "m"},
                       {{"INFLUENCE_LLM_API_KEY", "k"}});
    CHECK(r.code == 3);
    CHECK(r.err.find("provider failure") != std::string::npos);
}

TEST_CASE("flags beat env which beats the config file") {
    const auto dir = fixtures::scratch("cli-layers");
    influence::write_text_file(dir / "c.json", R"({"sampling": {"n_samples": 4}, "seed": 1})");
    auto r = cli({"score", "--dataset", fx("ablation_dataset.jsonl"), "--id", "q001", "--mock", "--json"},
                 {{"INFLUENCE_CONFIG", (dir / "c.json").string()}, {"INFLUENCE_SEED", "5"}});
    REQUIRE(r.code == 0);
    auto meta = nlohmann::json::parse(r.out)["meta"];
    CHECK(meta["n_samples"] == 4);
    CHECK(meta["seed"] == 5);

    r = cli({"score", "--config", (dir / "c.json").string(), "-n", "6", "--seed", "8", "--dataset",
             fx("ablation_dataset.jsonl"), "--id", "q001", "--mock", "--json"},
            {{"INFLUENCE_SEED", "5"}});
    REQUIRE(r.code == 0);
    meta = nlohmann::json::parse(r.out)["meta"];
    CHECK(meta["n_samples"] == 6);
    CHECK(meta["seed"] == 8);
}

TEST_CASE("configuration mistakes exit 2") {
    const auto dir = fixtures::scratch("cli-bad");
    influence::write_text_file(dir / "c.json", R"({"samplng": {}})");
    CHECK(cli({"score", "--config", (dir / "c.json").string(), "--mock", "--dataset", fx("ablation_dataset.jsonl"),
               "--id", "q001"})
              .code == 2);
    CHECK(cli({"score", "--bogus"}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"score", "--mock", "--dataset", fx("ablation_dataset.jsonl"), "--id", "nope"}).code == 2);
    CHECK(cli({"score", "--mock", "-n", "1", "--dataset", fx("ablation_dataset.jsonl"), "--id", "q001"}).code == 2);
    CHECK(cli({"ablation-eval", "--mock", "--judge", "llm", "--dataset", fx("ablation_dataset.jsonl")}).code == 2);
    CHECK(cli({"ingest", "--dataset", (dir / "missing.jsonl").string()}).code == 2);
}

TEST_CASE("stats subcommand and poison-eval --stats") {
    auto r = cli({"stats", "0.86", "0.2", "3000"});
    CHECK(r.code == 0);
    CHECK(r.out.find("z=90.37") != std::string::npos);
    CHECK(r.out.find("wald_half_width=0.0124") != std::string::npos);
    r = cli({"poison-eval", "--stats", "0.5", "0.2", "100"});
    CHECK(r.code == 0);
    CHECK(r.out.find("z=7.50") != std::string::npos);
    CHECK(cli({"stats", "0.5", "1", "100"}).code == 2);
}

TEST_CASE("poison-eval exits 4 when records run out") {
    const auto dir = fixtures::scratch("cli-partial");
    const auto r = cli({"poison-eval", "--mock", "--dataset", fx("ablation_dataset.jsonl"), "--llm-script",
                        fx("poison_script.json"), "--count", "50", "--max-passes", "2", "--out-dir", dir.string()});
    CHECK(r.code == 4);
    const auto summary = nlohmann::json::parse(influence::read_text_file(dir / "poison_summary.json"));
    CHECK(summary["partial"] == true);
    CHECK(summary["stats"]["n"] == 40);
}

TEST_CASE("ingest can build a corpus") {
    const auto dir = fixtures::scratch("cli-ingest");
    const auto r = cli({"ingest", "--dataset", fx("ablation_dataset.jsonl"), "--corpus-out", (dir / "c.jsonl").string(),
                        "--mock"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("20 records, 100 documents, 0 skipped rows") != std::string::npos);
    const auto s = cli({"score", "--mock", "--corpus", (dir / "c.jsonl").string(), "--query",
                        "Who founded the Talhalkel guild?", "-k", "4", "--json"});
    REQUIRE(s.code == 0);
    CHECK(nlohmann::json::parse(s.out)["report"]["per_doc"].size() == 4);
}

TEST_CASE("entropy of a raw prompt") {
    const auto r = cli({"entropy", "--mock", "--prompt", "Say something", "--json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["samples"].size() == 10);
    CHECK(j["entropy"]["value"].get<double>() >= 0.0);
}

}
