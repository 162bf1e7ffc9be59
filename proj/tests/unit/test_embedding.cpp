#include <doctest.h>

#include <cmath>

#include "influence/embedding.hpp"
#include "influence/errors.hpp"
#include "support.hpp"

using namespace influence;

TEST_SUITE("embedding") {

TEST_CASE("mock embedder is order-insensitive and unit length") {
    MockEmbedder e;
    const auto a = e.embed_one("a b");
    const auto b = e.embed_one("b a");
    CHECK(a == b);
    CHECK(e.embed_one("Same text") == e.embed_one("same TEXT"));
    double norm = 0.0;
    for (double x : e.embed_one("the quick brown fox").values) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));
    CHECK(a.dim() == 64);
}

TEST_CASE("whitespace-only text gets a flagged basis vector") {
    MockEmbedder e;
    const auto v = e.embed_one("   ");
    CHECK(v.substituted);
    CHECK(std::count(v.values.begin(), v.values.end(), 1.0) == 1);
    CHECK(e.embed_one("   ") == v);
    CHECK_THROWS_AS(e.embed_one(""), DomainError);
}

TEST_CASE("cosine") {
    std::vector<double> x{1, 0}, y{0, 1}, d{1, 1};
    CHECK(cosine(x, x) == 1.0);
    CHECK(cosine(x, y) == 0.0);
    CHECK(cosine(d, x) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    std::vector<double> zero{0, 0}, three{1, 2, 3};
    CHECK_THROWS_AS(cosine(zero, x), DomainError);
    CHECK_THROWS_AS(cosine(three, x), DomainError);
}

TEST_CASE("similarity matrices") {
    MockEmbedder e;
    std::vector<std::string> same(4, "Paris");
    const auto m = similarity_matrix(same, e);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(m.at(i, j) == 1.0);

    std::vector<EmbeddingVector> ortho{{{1, 0}, false}, {{0, 1}, false}};
    CHECK(similarity_matrix(ortho).rows() == std::vector<std::vector<double>>{{1, 0}, {0, 1}});

    std::vector<std::string> three{"red apple", "green apple pie", "blue sky"};
    const auto s = similarity_matrix(three, e);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            const auto a = e.embed_one(three[i]).values, b = e.embed_one(three[j]).values;
            double dot = 0, na = 0, nb = 0;
            for (std::size_t t = 0; t < a.size(); ++t) {
                dot += a[t] * b[t];
                na += a[t] * a[t];
                nb += b[t] * b[t];
            }
            CHECK(s.at(i, j) == doctest::Approx(dot / std::sqrt(na * nb)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(SimilarityMatrix::from_rows({{1, 0.5}, {0.4, 1}}), DomainError);
    CHECK_THROWS_AS(SimilarityMatrix::from_rows({{1, 2}, {2, 1}}), DomainError);
}

TEST_CASE("remote embedder replays a 768-dim reply") {
    fixtures::LocalServer s;
    nlohmann::json seen;
    s.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        nlohmann::json reply = {{"data", nlohmann::json::array()}};
        for (std::size_t i = 0; i < seen["input"].size(); ++i) {
            std::vector<double> v(768, 0.0);
            v[i] = 1.0;
            reply["data"].push_back({{"index", i}, {"embedding", v}});
        }
        res.set_content(reply.dump(), "application/json");
    });
    s.start();

    RemoteEmbedderConfig c;
    c.endpoint = s.url("/v1/embeddings");
    c.model = "embed-test";
    c.api_key = "k";
    c.timeout = std::chrono::seconds(5);
    RemoteEmbedder e(c);
    std::vector<std::string> texts{"one", "two"};
    const auto out = e.embed(texts);
    REQUIRE(out.size() == 2);
    CHECK(out[0].dim() == 768);
    CHECK(e.dimension() == 768);
    CHECK(cosine(out[0], out[1]) == 0.0);
    CHECK(seen["model"] == "embed-test");
    CHECK(seen["input"] == nlohmann::json::array({"one", "two"}));
}

TEST_CASE("embedding replies with the wrong count are protocol errors") {
    const auto reply = nlohmann::json::parse(R"({"data":[{"embedding":[1,0]}]})");
    CHECK(parse_embedding_reply(reply, 1).size() == 1);
    CHECK_THROWS_AS(parse_embedding_reply(reply, 2), ProtocolError);
    CHECK_THROWS_AS(parse_embedding_reply(nlohmann::json::parse("{}"), 1), ProtocolError);
}

}
