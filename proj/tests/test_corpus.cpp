#include "daud/corpus.hpp"
#include "daud/errors.hpp"
#include "daud/jsonl.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

namespace fs = std::filesystem;
using namespace daud;

namespace {

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / ("daud_corpus_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  return dir;
}

Corpus tiny_corpus() {
  Corpus c;
  c.news.push_back({"n1", "politics", "alpha beta", VeracityLabel::Fake, 100});
  c.news.push_back({"n2", "health", "gamma delta", VeracityLabel::True, 200});
  c.engagements.push_back({"u1", "n1", "first comment", 150, false});
  c.engagements.push_back({"u1", "n2", "synthetic note", 250, true});
  c.engagements.push_back({"u2", "n2", "", std::nullopt, false});
  c.rebuild_index();
  return c;
}

}  // namespace

TEST_CASE("corpus round-trips through jsonl") {
  fs::path dir = temp_dir();
  Corpus c = tiny_corpus();
  save_corpus(c, dir / "c.jsonl");
  Corpus back = load_corpus(dir / "c.jsonl");

  REQUIRE(back.news.size() == 2);
  REQUIRE(back.engagements.size() == 3);
  CHECK(back.news[0].id == "n1");
  CHECK(back.news[0].label == VeracityLabel::Fake);
  CHECK(back.news[1].timestamp == std::optional<int64_t>(200));
  CHECK(back.engagements[1].synthetic);
  CHECK_FALSE(back.engagements[2].timestamp.has_value());
  CHECK(back.engagements[2].comment.empty());
  fs::remove_all(dir);
}

TEST_CASE("random corpora survive save/load unchanged") {
  fs::path dir = temp_dir();
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c;
    size_t n_news = 1 + rng() % 8;
    for (size_t i = 0; i < n_news; ++i) {
      NewsItem item;
      item.id = "n" + std::to_string(i);
      item.domain = (rng() % 2) ? "a" : "b";
      item.text = "w" + std::to_string(rng() % 100);
      item.label = (rng() % 2) ? VeracityLabel::Fake : VeracityLabel::True;
      if (rng() % 3) item.timestamp = static_cast<int64_t>(rng() % 10000);
      c.news.push_back(item);
    }
    size_t n_eng = rng() % 12;
    for (size_t i = 0; i < n_eng; ++i) {
      EngagementRecord rec;
      rec.user_id = "u" + std::to_string(i);  // unique pairs, no dedupe
      rec.news_id = "n" + std::to_string(rng() % n_news);
      rec.comment = (rng() % 2) ? "note " + std::to_string(i) : "";
      if (rng() % 2) rec.timestamp = static_cast<int64_t>(rng() % 10000);
      rec.synthetic = rng() % 4 == 0;
      c.engagements.push_back(rec);
    }
    c.rebuild_index();
    save_corpus(c, dir / "r.jsonl");
    Corpus back = load_corpus(dir / "r.jsonl");
    REQUIRE(back.news.size() == c.news.size());
    REQUIRE(back.engagements.size() == c.engagements.size());
    for (size_t i = 0; i < c.news.size(); ++i) {
      CHECK(news_to_json(back.news[i]) == news_to_json(c.news[i]));
    }
    for (size_t i = 0; i < c.engagements.size(); ++i) {
      CHECK(engagement_to_json(back.engagements[i]) == engagement_to_json(c.engagements[i]));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("duplicate engagement pairs collapse to the earliest timestamp") {
  fs::path dir = temp_dir();
  std::string lines =
      R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"true"})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"late","timestamp":500})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"early","timestamp":100})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"mid","timestamp":300})" "\n";
  write_file(dir / "d.jsonl", lines);
  LoadStats stats;
  Corpus c = load_corpus(dir / "d.jsonl", &stats);
  REQUIRE(c.engagements.size() == 1);
  CHECK(c.engagements[0].comment == "early");
  CHECK(stats.duplicate_engagements_dropped == 2);
  fs::remove_all(dir);
}

TEST_CASE("file order breaks dedupe ties and stands in for missing timestamps") {
  fs::path dir = temp_dir();
  std::string lines =
      R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"true"})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"first"})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"second"})" "\n";
  write_file(dir / "d.jsonl", lines);
  Corpus c = load_corpus(dir / "d.jsonl");
  REQUIRE(c.engagements.size() == 1);
  CHECK(c.engagements[0].comment == "first");

  // A timestamped record beats any untimestamped one.
  lines =
      R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"true"})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"untimed"})" "\n"
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"timed","timestamp":900})" "\n";
  write_file(dir / "e.jsonl", lines);
  c = load_corpus(dir / "e.jsonl");
  REQUIRE(c.engagements.size() == 1);
  CHECK(c.engagements[0].comment == "timed");
  fs::remove_all(dir);
}

TEST_CASE("engagements may precede their news item in the file") {
  fs::path dir = temp_dir();
  std::string lines =
      R"({"kind":"engagement","user_id":"u","news_id":"n1","comment":"early bird"})" "\n"
      R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"fake"})" "\n";
  write_file(dir / "d.jsonl", lines);
  Corpus c = load_corpus(dir / "d.jsonl");
  CHECK(c.engagements.size() == 1);
  CHECK(c.news_at("n1").label == VeracityLabel::Fake);
  fs::remove_all(dir);
}

TEST_CASE("load errors carry data-error codes") {
  fs::path dir = temp_dir();
  write_file(dir / "dangle.jsonl",
             R"({"kind":"engagement","user_id":"u","news_id":"ghost","comment":""})" "\n");
  CHECK_THROWS_WITH_AS(load_corpus(dir / "dangle.jsonl"), doctest::Contains("DanglingReference"),
                       Error);

  write_file(dir / "dup.jsonl",
             R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"true"})" "\n"
             R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"fake"})" "\n");
  CHECK_THROWS_WITH_AS(load_corpus(dir / "dup.jsonl"), doctest::Contains("DuplicateNewsId"), Error);

  write_file(dir / "label.jsonl",
             R"({"kind":"news","id":"n1","domain":"d","text":"t","label":"maybe"})" "\n");
  CHECK_THROWS_WITH_AS(load_corpus(dir / "label.jsonl"), doctest::Contains("UnknownLabel"), Error);

  write_file(dir / "field.jsonl", R"({"kind":"news","id":"n1"})" "\n");
  CHECK_THROWS_WITH_AS(load_corpus(dir / "field.jsonl"), doctest::Contains("MissingField"), Error);

  try {
    load_corpus(dir / "label.jsonl");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(exit_code_for(e.kind()) == 3);
  }
  fs::remove_all(dir);
}

TEST_CASE("lookups and filters") {
  Corpus c = tiny_corpus();
  CHECK(c.find_news("n1") != nullptr);
  CHECK(c.find_news("nope") == nullptr);
  CHECK_THROWS_AS(c.news_at("nope"), Error);
  CHECK(c.domains() == std::set<std::string>{"health", "politics"});
  CHECK(c.user_ids() == std::set<std::string>{"u1", "u2"});

  auto real = c.real_engagements_of("u1");
  REQUIRE(real.size() == 1);  // the synthetic record is filtered out
  CHECK(real[0]->news_id == "n1");
}
