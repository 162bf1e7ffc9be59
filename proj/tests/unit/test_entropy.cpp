#include <doctest.h>

#include <cmath>
#include <map>

#include "influence/entropy.hpp"
#include "influence/errors.hpp"
#include "influence/rng.hpp"
#include "support.hpp"

using namespace influence;

namespace {

SimilarityMatrix sym3(double s01, double s02, double s12) {
    return SimilarityMatrix::from_rows({{1, s01, s02}, {s01, 1, s12}, {s02, s12, 1}});
}

SimilarityMatrix identity(std::size_t n, double off) {
    SimilarityMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, off);
    return m;
}

}  // namespace

TEST_SUITE("entropy") {

TEST_CASE("literal estimator examples") {
    SimilarityMatrix ones(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) ones.set(i, j, 1.0);
    CHECK(literal_semantic_entropy(ones).value == doctest::Approx(2.0).epsilon(1e-12));

    CHECK(literal_semantic_entropy(identity(2, 0.3)).value == doctest::Approx(1.0));
    CHECK(literal_semantic_entropy(identity(2, -1.0)).value == doctest::Approx(1.0));

    const auto h = literal_semantic_entropy(sym3(1, -1, -1));
    CHECK(h.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(literal_scores(sym3(1, -1, -1)) == std::vector<double>{0.5, 0.5, 0.0});
}

TEST_CASE("clustered estimator examples") {
    SimilarityMatrix ones(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) ones.set(i, j, 1.0);
    CHECK(clustered_semantic_entropy(ones, 1.0).first.value == 0.0);
    CHECK(clustered_semantic_entropy(identity(4, 0.0), 0.9).first.value == 2.0);

    // clusters {0,1,2} and {3}
    SimilarityMatrix m(4);
    m.set(0, 1, 0.95);
    m.set(1, 2, 0.95);
    m.set(0, 2, 0.7);
    const auto [est, clusters] = clustered_semantic_entropy(m, 0.9);
    CHECK(clusters.sizes() == std::vector<std::size_t>{3, 1});
    CHECK(est.value == doctest::Approx(0.8112781244591328).epsilon(1e-9));
}

TEST_CASE("single linkage chains through intermediate samples") {
    SimilarityMatrix m(3);
    m.set(0, 1, 0.85);  // mapped 0.925
    m.set(1, 2, 0.85);
    m.set(0, 2, 0.0);   // mapped 0.5
    CHECK(cluster_by_similarity(m, 0.9).cluster_count() == 1);
    CHECK(cluster_by_similarity(m, 0.95).cluster_count() == 3);
    CHECK(cluster_by_similarity(m, 0.95).labels == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("entropy from counts") {
    std::vector<std::size_t> c{2, 2};
    CHECK(entropy_from_counts(c) == 1.0);
    std::vector<std::size_t> one{7};
    CHECK(entropy_from_counts(one) == 0.0);
    std::vector<std::size_t> none{};
    CHECK(entropy_from_counts(none) == 0.0);
}

TEST_CASE("probability vectors") {
    std::vector<double> s{1, 3};
    const auto p = ProbabilityVector::from_scores(s);
    CHECK(p.valid());
    CHECK(p.p[1] == doctest::Approx(0.75));
    std::vector<double> neg{1, -1};
    CHECK_THROWS_AS(ProbabilityVector::from_scores(neg), DomainError);
}

TEST_CASE("engine: a deterministic context has zero entropy") {
    Gateway gw(fixtures::mock({}, {{"X", 1}}));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    Query q{"q", "question?", {}, {}};
    std::vector<Document> docs{{"d0", "text", Origin::Dataset, {}}};
    CHECK(engine.conditional_entropy(q, docs, ContextSpec::all(), 3).value == 0.0);
}

TEST_CASE("engine: two equal answers match the hand count of the realised draws") {
    Gateway gw(fixtures::mock({}, {{"alpha", 1}, {"omega", 1}}));
    MockEmbedder emb;
    REQUIRE(emb.bucket("alpha") != emb.bucket("omega"));
    EntropyEngine engine(gw, emb, {});
    Query q{"q", "question?", {}, {}};
    std::vector<Document> docs{{"d0", "text", Origin::Dataset, {}}};
    const auto eval = engine.evaluate(q, docs, ContextSpec::all(), 10);

    std::map<std::string, double> counts;
    for (const auto& t : eval->responses.texts()) counts[t] += 1;
    double h = 0.0;
    for (const auto& [t, c] : counts) h -= c / 10.0 * std::log2(c / 10.0);
    CHECK(eval->entropy.value == doctest::Approx(h).epsilon(1e-12));

    DecodingParams big;
    big.n_samples = 2000;
    big.seed = 1;
    EntropyConfig cfg;
    cfg.decoding = big;
    EntropyEngine large(gw, emb, cfg);
    CHECK(large.conditional_entropy(q, docs, ContextSpec::all(), 1).value == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("engine caches by signature and relabels shared contexts") {
    Gateway gw(fixtures::mock({}, {{"a", 1}, {"b", 1}}));
    MockEmbedder emb;
    EntropyEngine engine(gw, emb, {});
    Query q{"q", "question?", {}, {}};
    std::vector<Document> docs{{"d0", "zero", Origin::Dataset, {}}, {"d1", "one", Origin::Dataset, {}}};
    const auto single = engine.evaluate(q, docs, ContextSpec::single(1), 5);
    const auto subset = engine.evaluate(q, docs, ContextSpec::subset({1}), 5);
    CHECK(engine.cache_size() == 1);
    CHECK(gw.distinct_contexts() == 1);
    CHECK(subset->entropy.value == single->entropy.value);
    CHECK(subset->entropy.context == ContextSpec::subset({1}));
}

TEST_CASE("context seeds ignore document order but not membership") {
    Query q{"q", "question?", {}, {}};
    std::vector<Document> ab{{"a", "x", Origin::Dataset, {}}, {"b", "y", Origin::Dataset, {}}};
    std::vector<Document> ba{ab[1], ab[0]};
    CHECK(EntropyEngine::context_seed(1, q, ab, ContextSpec::all()) ==
          EntropyEngine::context_seed(1, q, ba, ContextSpec::all()));
    CHECK(EntropyEngine::context_seed(1, q, ab, ContextSpec::single(0)) !=
          EntropyEngine::context_seed(1, q, ab, ContextSpec::all()));
}

}
