#include <doctest.h>

#include "influence/rag.hpp"
#include "influence/serialize.hpp"
#include "support.hpp"

using namespace influence;

TEST_SUITE("serialize") {

TEST_CASE("episode logs round trip through jsonl") {
    const auto records = ingest(fixtures::dir() / "poison_dataset.jsonl").records;
    Gateway gw(std::make_shared<MockLlm>(MockScript::load(fixtures::dir() / "poison_script.json")));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    InfluenceConfig icfg;
    icfg.compute_unconditioned = true;
    icfg.include_leave_one_out = true;
    AttackConfig cfg;
    cfg.influence = icfg;
    const auto r = run_poison_eval(std::span(records).first(4), 4, engine, cfg, 3);
    const auto text = to_jsonl(r.episodes);
    CHECK(from_jsonl<EpisodeResult>(text) == r.episodes);
    CHECK(nlohmann::json(r.stats).get<DetectionStats>() == r.stats);
}

TEST_CASE("poison summary carries the table rows") {
    PoisonEvalResult r;
    r.stats.top1 = 1.0;
    const auto j = poison_summary_json(r);
    const auto& rows = j["table"]["rows"];
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][0] == "Top 1");
    CHECK(rows[1][0] == "Top 2");
    CHECK(rows[2][0] == "Top 3");
    CHECK(rows[3][0] == "Prompt Eng.");
    CHECK(rows[3][1].is_null());
}

TEST_CASE("ablation episodes round trip") {
    AblationEpisode e;
    e.query_id = "q";
    e.seed = 9;
    e.response_a = "a";
    e.top2_indices = {3, 1};
    e.b_indices = {1, 3};
    e.c_indices = {0, 2, 4};
    e.judge_choice = JudgeChoice::C;
    e.is_values = {0.1, -0.2};
    CHECK(nlohmann::json(e).get<AblationEpisode>() == e);
    AblationSummary s{3, 1, 1, 1, 1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(nlohmann::json(s).get<AblationSummary>() == s);
}

TEST_CASE("text files") {
    const auto dir = fixtures::scratch("serialize");
    write_text_file(dir / "a" / "b.txt", "hello\n");
    CHECK(read_text_file(dir / "a" / "b.txt") == "hello\n");
    CHECK_THROWS_AS(read_text_file(dir / "nope.txt"), IoError);
}

}
