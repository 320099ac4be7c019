#include <doctest.h>

#include <set>

#include "tpot/backends.hpp"
#include "tpot/embedding.hpp"
#include "tpot/error.hpp"
#include "tpot/synthetic.hpp"
#include "tpot/test_backend.hpp"

using namespace tpot;

TEST_CASE("synthetic corpus is deterministic") {
  const auto& catalog = builtin_catalog();
  SyntheticOptions options;
  options.authors = 25;
  const auto a = synthetic_corpus(catalog, options);
  const auto b = synthetic_corpus(catalog, options);
  REQUIRE(a.size() == 25);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].author_id == b[i].author_id);
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].responses->responses == b[i].responses->responses);
  }
  CHECK(a[0].author_id == "syn0001");
  options.seed = 8;
  CHECK(synthetic_corpus(catalog, options)[0].text != a[0].text);
}

TEST_CASE("synthetic responses and sentences") {
  const auto& catalog = builtin_catalog();
  SyntheticOptions options;
  options.authors = 40;
  for (const auto& record : synthetic_corpus(catalog, options)) {
    REQUIRE(record.responses);
    for (int r : record.responses->responses) CHECK((r >= 1 && r <= 5));
    const auto sentences = split_sentences(record.text);
    CHECK(sentences.size() >= options.min_distractors);
  }
}

TEST_CASE("synthetic keywords are distinct") {
  std::set<std::string_view> seen;
  for (int id = 1; id <= 60; ++id) seen.insert(synthetic_keyword(id));
  CHECK(seen.size() == 60);
  CHECK_THROWS_AS(synthetic_keyword(0), Error);
}

TEST_CASE("adverb phrases land on their item topic") {
  const auto& catalog = builtin_catalog();
  TestBackend backend(4, 96);
  register_synthetic_lexicon(backend, catalog);
  const std::string keyword(synthetic_keyword(1));
  const auto statement = backend.embed_one(catalog.item(1).statement);
  const auto planted = backend.embed_one("I am always " + keyword + ".");
  const auto other = backend.embed_one("I am always " + std::string(synthetic_keyword(30)) + ".");
  CHECK(cosine_similarity(statement, planted) > 0.5);
  CHECK(cosine_similarity(statement, other) < 0.2);

  TestBackend tiny(4, 32);
  CHECK_THROWS_AS(register_synthetic_lexicon(tiny, catalog), Error);
}

TEST_CASE("off-topic corpus") {
  const auto records = off_topic_corpus(5, 2, 12);
  REQUIRE(records.size() == 5);
  CHECK(records[0].author_id == "off0001");
  CHECK(split_sentences(records[0].text).size() == 12);
  CHECK(records[0].responses);
}

TEST_CASE("backend specs") {
  auto spec = parse_backend_spec("test:3");
  CHECK(spec.kind == BackendSpec::Kind::Test);
  CHECK(spec.seed == 3);
  CHECK(spec.dimension == kDefaultTestDimension);
  spec = parse_backend_spec("test:3:16:6");
  CHECK(spec.dimension == 16);
  CHECK(spec.max_tokens == 6);
  spec = parse_backend_spec("http:http://127.0.0.1:8471");
  CHECK(spec.kind == BackendSpec::Kind::Http);
  CHECK(spec.url == "http://127.0.0.1:8471");
  for (const char* bad : {"", "test:", "test:x", "test:1:2:3:4", "test:1:1", "grpc:x", "http:"}) {
    CHECK_THROWS_AS(parse_backend_spec(bad), Error);
  }
  const auto backend = open_backend(parse_backend_spec("test:2:24"), builtin_catalog(), std::nullopt);
  CHECK(backend->descriptor().dimension == 24);
}
