#include <doctest.h>

#include <algorithm>

#include "influence/attack.hpp"
#include "influence/errors.hpp"
#include "influence/influence.hpp"
#include "influence/rag.hpp"
#include "support.hpp"

using namespace influence;

namespace {

EntropyEstimate est(double v, ContextSpec c) { return {v, Estimator::Clustered, 10, std::move(c)}; }

DatasetRecord fixture_record(std::size_t i) {
    auto r = ingest(fixtures::dir() / "poison_dataset.jsonl").records.at(i);
    r.query.incorrect_target.reset();
    return r;
}

RetrievedSet poisoned(const DatasetRecord& r, std::size_t at, const std::string& target) {
    auto set = r.retrieved();
    set.documents[at] = craft_poison(r.query, target);
    return set;
}

class FailingProvider : public LlmProvider {
public:
    explicit FailingProvider(int ok_calls) : left_(ok_calls) {}
    std::vector<std::string> complete(const CompletionRequest& r) override {
        if (left_-- <= 0) throw GatewayError("endpoint down", 3);
        return std::vector<std::string>(r.n, "same");
    }
    std::string name() const override { return "failing"; }

private:
    int left_;
};

}  // namespace

TEST_SUITE("influence") {

TEST_CASE("report from engineered entropies") {
    const auto r = assemble_report("q", {"a", "b", "c"}, est(1.0, ContextSpec::all()),
                                   {est(0.9, ContextSpec::single(0)), est(0.3, ContextSpec::single(1)),
                                    est(1.2, ContextSpec::single(2))},
                                   std::nullopt);
    CHECK(r.per_doc[0].is_value == doctest::Approx(0.1));
    CHECK(r.per_doc[1].is_value == doctest::Approx(0.7));
    CHECK(r.per_doc[2].is_value == doctest::Approx(-0.2));
    CHECK(r.ranking == std::vector<std::size_t>{1, 0, 2});
    CHECK(rank_documents(r) == std::vector<std::string>{"b", "a", "c"});
    CHECK_NOTHROW(validate(r));
}

TEST_CASE("identical contexts give zero influence and the original order") {
    Gateway gw(fixtures::mock({}, {{"X", 1}}));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    const auto rec = fixture_record(0);
    const auto r = influence_scores(rec.query, rec.retrieved(), engine, {}, 1);
    for (const auto& d : r.per_doc) CHECK(d.is_value == 0.0);
    CHECK(r.ranking == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("poisoned document at index 2 ranks first") {
    Gateway gw(std::make_shared<MockLlm>(MockScript::load(fixtures::dir() / "poison_script.json")));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    const auto rec = fixture_record(0);
    const auto set = poisoned(rec, 2, "Draexvath");
    const auto r = influence_scores(rec.query, set, engine, {}, 42);
    CHECK(r.ranking.front() == 2);
    CHECK(r.per_doc[2].entropy_single.value == 0.0);
    CHECK(r.entropy_all.value == 0.0);
}

TEST_CASE("context budget is k+1, or 2k+1 with leave-one-out") {
    Gateway gw(fixtures::mock({}, {{"a", 1}, {"b", 1}, {"c", 1}}));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    const auto rec = fixture_record(1);

    auto r = influence_scores(rec.query, rec.retrieved(), engine, {}, 7);
    CHECK(r.contexts_consumed == 6);
    CHECK(gw.distinct_contexts() == 6);

    Gateway gw2(fixtures::mock({}, {{"a", 1}, {"b", 1}, {"c", 1}}));
    EntropyEngine engine2(gw2, emb, {});
    InfluenceConfig loo;
    loo.include_leave_one_out = true;
    loo.compute_unconditioned = true;
    r = influence_scores(rec.query, rec.retrieved(), engine2, loo, 7);
    CHECK(r.contexts_consumed == 11);
    CHECK(gw2.distinct_contexts() == 12);  // plus the unconditioned context
    REQUIRE(r.entropy_unconditioned);
    for (const auto& d : r.per_doc) {
        REQUIRE(d.pid);
        REQUIRE(d.entropy_leave_one_out);
        CHECK(-d.pid->excluded == doctest::Approx(d.is_value).epsilon(1e-12));
    }
}

TEST_CASE("fewer than two documents is a domain error") {
    Gateway gw(fixtures::mock({}, {{"a", 1}}));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    Query q{"q", "?", {}, {}};
    RetrievedSet one{"q", {{"d", "t", Origin::Dataset, {}}}};
    CHECK_THROWS_AS(influence_scores(q, one, engine, {}, 1), DomainError);
}

TEST_CASE("scores never depend on the origin label") {
    Gateway gw(std::make_shared<MockLlm>(MockScript::load(fixtures::dir() / "poison_script.json")));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    const auto raw = ingest(fixtures::dir() / "poison_dataset.jsonl").records.at(3);
    const auto rec = fixture_record(3);
    auto set = poisoned(rec, 1, *raw.query.incorrect_target);
    const auto labelled = influence_scores(rec.query, set, engine, {}, 9);
    for (auto& d : set.documents) d.origin = Origin::Dataset;
    const auto blind = influence_scores(rec.query, set, engine, {}, 9);
    CHECK(labelled == blind);
}

TEST_CASE("permuting the retrieved set permutes the scores") {
    Gateway gw(std::make_shared<MockLlm>(MockScript::load(fixtures::dir() / "poison_script.json")));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    const auto raw = ingest(fixtures::dir() / "poison_dataset.jsonl").records.at(4);
    const auto rec = fixture_record(4);
    const auto set = poisoned(rec, 0, *raw.query.incorrect_target);
    const auto base = influence_scores(rec.query, set, engine, {}, 5);

    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    RetrievedSet shuffled{set.query_id, {}};
    for (auto i : perm) shuffled.documents.push_back(set.documents[i]);
    const auto moved = influence_scores(rec.query, shuffled, engine, {}, 5);
    for (std::size_t j = 0; j < perm.size(); ++j) {
        CHECK(moved.per_doc[j].doc_id == base.per_doc[perm[j]].doc_id);
        CHECK(moved.per_doc[j].entropy_single.value == base.per_doc[perm[j]].entropy_single.value);
        CHECK(moved.per_doc[j].is_value == base.per_doc[perm[j]].is_value);
    }
    CHECK(moved.per_doc[moved.ranking.front()].doc_id == base.per_doc[base.ranking.front()].doc_id);
}

TEST_CASE("provider failure mid-run reports partial progress") {
    Gateway gw(std::make_shared<FailingProvider>(3));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    const auto rec = fixture_record(0);
    try {
        influence_scores(rec.query, rec.retrieved(), engine, {}, 1);
        FAIL("expected a partial result");
    } catch (const PartialInfluenceError& e) {
        CHECK(e.provider_failure());
        CHECK(e.entropy_all().has_value());
        CHECK(e.completed() == 3);
    }
}

}
