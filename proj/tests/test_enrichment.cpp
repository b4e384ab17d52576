#include "daud/enrichment.hpp"
#include "daud/errors.hpp"
#include "daud/schema.hpp"

#include <doctest.h>

#include <filesystem>

using namespace daud;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("daud_enrich_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

LlmGateway canned_gateway(const std::string& tag) {
  json rules = {
      {"rules",
       {{"NFE",
         {{"kind", "template"},
          {"markers", {{{"name", "dom"}, {"pattern", "dom_(\\w+)"}}}},
          {"template", render_block(schema_by_id("nfe"),
                                    {{"summary", "A {dom} story."},
                                     {"news_domain", "{dom}"},
                                     {"sentiment", "neutral"},
                                     {"structural", "inverted pyramid"},
                                     {"logical_consistency", "coherent"},
                                     {"source_credibility", "named sources"}})},
          {"default", "no block here, just prose"}}},
        {"CommentStyle",
         {{"kind", "template"},
          {"markers", {{{"name", "mood"}, {"pattern", "MOOD:(\\w+)"}}}},
          {"template", render_block(schema_by_id("style"),
                                    {{"style_text", "Writes {mood} one-liners."},
                                     {"tone", "{mood}"},
                                     {"intent", "debunk"},
                                     {"linguistic_style", "concise"},
                                     {"stance_consistency", "steady"},
                                     {"targeting_pattern", "institutions"}})},
          {"default", render_block(schema_by_id("style"),
                                   {{"style_text", "Writes plain notes."},
                                    {"tone", "even"},
                                    {"intent", "inform"},
                                    {"linguistic_style", "plain"},
                                    {"stance_consistency", "steady"},
                                    {"targeting_pattern", "public"}})}}}}}};
  return LlmGateway(BackendKind::Mock, MockRuleTable::from_json(rules), HttpBackendConfig{},
                    temp_dir(tag));
}

EngagementRecord rec(const std::string& comment, int64_t ts) {
  EngagementRecord r;
  r.user_id = "u1";
  r.news_id = "n1";
  r.comment = comment;
  r.timestamp = ts;
  return r;
}

}  // namespace

TEST_CASE("nfe output parses into the enriched record") {
  std::string output = "Some reasoning first.\n" +
                       render_block(schema_by_id("nfe"), {{"summary", "Quake hits region."},
                                                          {"news_domain", "disaster"},
                                                          {"sentiment", "sober"},
                                                          {"structural", "chronological"},
                                                          {"logical_consistency", "consistent"},
                                                          {"source_credibility", "agency wire"}}) +
                       "\ntrailing prose";
  EnrichedNews e = parse_nfe_output("n42", output);
  CHECK(e.news_id == "n42");
  CHECK(e.summary == "Quake hits region.");
  CHECK(e.features.news_domain == "disaster");
  CHECK(e.features.sentiment == "sober");
  CHECK(e.features.structural == "chronological");
  CHECK(e.features.logical_consistency == "consistent");
  CHECK(e.features.source_credibility == "agency wire");
}

TEST_CASE("prose without a block or with empty fields is rejected") {
  CHECK_THROWS_WITH_AS(parse_nfe_output("n1", "just an apology, no block"),
                       doctest::Contains("MissingBlock"), Error);
  std::string missing = "```daud:nfe\nsummary: ok\nnews_domain: politics\n```";
  CHECK_THROWS_WITH_AS(parse_nfe_output("n1", missing), doctest::Contains("MissingField"), Error);
  std::string empty_field =
      render_block(schema_by_id("nfe"), {{"summary", "s"},
                                         {"news_domain", ""},
                                         {"sentiment", "x"},
                                         {"structural", "x"},
                                         {"logical_consistency", "x"},
                                         {"source_credibility", "x"}});
  CHECK_THROWS_WITH_AS(parse_nfe_output("n1", empty_field), doctest::Contains("MissingField"), Error);
}

TEST_CASE("enrich_news drives the gateway and caches by request") {
  LlmGateway gw = canned_gateway("news");
  NewsItem item;
  item.id = "n7";
  item.domain = "politics";
  item.text = "dom_politics something happened";

  EnrichedNews e = enrich_news(item, gw);
  CHECK(e.news_id == "n7");
  CHECK(e.summary == "A politics story.");
  CHECK(e.features.news_domain == "politics");
  CHECK(gw.backend_calls() == 1);

  EnrichedNews again = enrich_news(item, gw);
  CHECK(again.summary == e.summary);
  CHECK(gw.backend_calls() == 1);
}

TEST_CASE("a backend reply without the block surfaces MissingBlock") {
  LlmGateway gw = canned_gateway("prose");
  NewsItem item;
  item.id = "n8";
  item.domain = "misc";
  item.text = "no marker tokens at all";
  CHECK_THROWS_WITH_AS(enrich_news(item, gw), doctest::Contains("MissingBlock"), Error);
}

TEST_CASE("commenting style distills the most recent comments oldest-first") {
  LlmGateway gw = canned_gateway("style");

  std::vector<EngagementRecord> history;
  for (int i = 0; i < 25; ++i) history.push_back(rec("filler note " + std::to_string(i), 100 + i));
  history.push_back(rec("MOOD:sardonic closing remark", 1000));

  CommentingFeature feat = extract_commenting_style("u1", history, gw);
  CHECK(feat.user_id == "u1");
  CHECK(feat.facets.tone == "sardonic");
  CHECK(feat.style_text == "Writes sardonic one-liners.");

  // Only the 20 most recent comments are offered, so an early marker is
  // invisible and the rule falls back to its default facets.
  std::vector<EngagementRecord> early;
  early.push_back(rec("MOOD:sardonic opener", 1));
  for (int i = 0; i < 24; ++i) early.push_back(rec("filler note " + std::to_string(i), 100 + i));
  CommentingFeature fallback = extract_commenting_style("u1", early, gw);
  CHECK(fallback.facets.tone == "even");

  CHECK_THROWS_WITH_AS(extract_commenting_style("u2", {}, gw), doctest::Contains("NoComments"),
                       Error);
}

TEST_CASE("untimestamped comments count as oldest") {
  LlmGateway gw = canned_gateway("untimed");
  std::vector<EngagementRecord> history;
  EngagementRecord untimed = rec("MOOD:weary remark", 0);
  untimed.timestamp.reset();
  history.push_back(untimed);
  for (int i = 0; i < 20; ++i) history.push_back(rec("filler note " + std::to_string(i), 100 + i));

  // 21 comments: the untimestamped one sorts oldest, so the 20-comment window
  // drops it and the marker never reaches the backend.
  CommentingFeature feat = extract_commenting_style("u1", history, gw);
  CHECK(feat.facets.tone == "even");
}

TEST_CASE("enriched and style indexes round-trip through disk") {
  fs::path dir = temp_dir("io");

  EnrichedIndex enriched;
  enriched["n1"] = EnrichedNews{"n1", "First summary.",
                                {"politics", "neutral", "tight", "consistent", "wire"}};
  enriched["n2"] = EnrichedNews{"n2", "Second summary.",
                                {"health", "calm", "loose", "shaky", "blog"}};
  save_enriched(enriched, dir / "enriched.jsonl");
  EnrichedIndex loaded = load_enriched(dir / "enriched.jsonl");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded["n1"].summary == "First summary.");
  CHECK(loaded["n2"].features.news_domain == "health");
  CHECK(loaded["n2"].features.source_credibility == "blog");

  StyleIndex styles;
  styles["u1"] = CommentingFeature{"u1", "Curt corrections.",
                                   {"dry", "debunk", "concise", "steady", "institutions"}};
  save_styles(styles, dir / "styles.jsonl");
  StyleIndex styles_loaded = load_styles(dir / "styles.jsonl");
  REQUIRE(styles_loaded.size() == 1);
  CHECK(styles_loaded["u1"].style_text == "Curt corrections.");
  CHECK(styles_loaded["u1"].facets.targeting_pattern == "institutions");
}
