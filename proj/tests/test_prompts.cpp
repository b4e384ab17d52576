#include "daud/errors.hpp"
#include "daud/prompts.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace daud;
namespace fs = std::filesystem;

namespace {

std::string golden(const std::string& name) {
  fs::path path = fs::path(DAUD_TESTS_DIR) / "golden" / (name + ".txt");
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing golden file " << path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string flatten(const ChatRequest& req) {
  std::ostringstream out;
  out << "[kind] " << prompt_kind_to_string(req.prompt_kind) << "\n"
      << "[schema] " << req.schema_id << "\n"
      << "[system]\n"
      << req.system_text << "\n"
      << "[user]\n"
      << req.user_text << "\n";
  return out.str();
}

NewsFeatures demo_features() {
  return {"politics", "exaggerated", "short paragraphs", "contradicts itself", "anonymous sourcing"};
}

StyleFacets demo_style() {
  return {"sarcastic", "debunk", "concise", "consistently skeptical", "addresses institutions"};
}

const char* kArticle = "Senator unveils sweeping new tax plan.";

}  // namespace

TEST_CASE("rendered prompts are pinned byte-for-byte") {
  CHECK(flatten(build_nfe_prompt(kArticle)) == golden("nfe"));
  CHECK(flatten(build_style_prompt({"old news, already debunked", "source? none given.",
                                    "classic clickbait"})) == golden("style"));
  CHECK(flatten(build_engage_prompt("I am a skeptical reader. I dislike sensational politics.",
                                    kArticle, demo_features())) == golden("engage"));
  CHECK(flatten(build_update_prompt("I am a skeptical reader.", kArticle, demo_features(),
                                    "The sensational tone conflicts with my preferences.",
                                    false)) == golden("update_reposted"));
  CHECK(flatten(build_update_prompt("I am a skeptical reader.", kArticle, demo_features(),
                                    "The topic matches my political interests.",
                                    true)) == golden("update_ignored"));
  CHECK(flatten(build_profile_init_prompt({{"politics", 7}, {"health", 3}},
                                          "Tone: sarcastic\nIntent: debunk")) == golden("profile_init"));
  CHECK(flatten(build_comment_prompt("I am a skeptical reader.", demo_style(), kArticle,
                                     "A politics piece covering the new tax plan.")) == golden("comment"));
}

TEST_CASE("analysis prompts carry their instruction bodies character-for-character") {
  std::string nfe = build_nfe_prompt(kArticle).user_text;
  CHECK(nfe.find("Recently, the user browsed a news article, its article content is: ") !=
        std::string::npos);
  CHECK(nfe.find("Your task is to analyze the content of the news text and then summarize the "
                 "characteristics of true and fake information within the news.") != std::string::npos);
  CHECK(nfe.find("(1) Identify and ignore website noise, such as ads, image captions, or unrelated "
                 "links.") != std::string::npos);
  CHECK(nfe.find("(2) Analyze the news text based on: News Domain, Sentiment (e.g., neutral, "
                 "emotional, exaggerated), Structural Features, Logical Consistency, Source "
                 "Credibility (Check sources of quotes and be suspicious).") != std::string::npos);

  std::string style = build_style_prompt({"only comment"}).user_text;
  // The apostrophe is U+2019, as published.
  CHECK(style.find("summarize the user’s typical tone and commenting style.") != std::string::npos);
  CHECK(style.find("(e.g., hashtags, URLs, emojis, or repost tags)") != std::string::npos);
  CHECK(style.find("Stance Consistency (e.g., does the user consistently take a certain side or "
                   "shift based on domain or content)") != std::string::npos);
}

TEST_CASE("engagement prompt embeds profile, article, and rendered features") {
  ChatRequest req = build_engage_prompt("PROFILE-SENTINEL", "ARTICLE-SENTINEL", demo_features());
  CHECK(req.prompt_kind == PromptKind::EngagePredict);
  CHECK(req.system_text.find("You are simulating the behavior of a Twitter (X) user") !=
        std::string::npos);
  CHECK(req.user_text.find("PROFILE-SENTINEL") != std::string::npos);
  CHECK(req.user_text.find("ARTICLE-SENTINEL") != std::string::npos);
  CHECK(req.user_text.find("based on this user’s perspective") != std::string::npos);
  CHECK(req.user_text.find(render_news_features(demo_features())) != std::string::npos);
  CHECK(req.user_text.find("(4) Decide whether to Repost or Ignore the news.") != std::string::npos);
}

TEST_CASE("update prompt flips direction with the actual engagement") {
  std::string reposted = build_update_prompt("p", "a", demo_features(), "e", false).user_text;
  CHECK(reposted.find("you predicted that this user would ignore the following news article") !=
        std::string::npos);
  CHECK(reposted.find("However, the user actually reposted the news article.") != std::string::npos);
  CHECK(reposted.find("led to the repost") != std::string::npos);

  std::string ignored = build_update_prompt("p", "a", demo_features(), "e", true).user_text;
  CHECK(ignored.find("you predicted that this user would repost the following news article") !=
        std::string::npos);
  CHECK(ignored.find("However, the user actually ignored the news article.") != std::string::npos);

  // The revision checklist is shared between both directions.
  for (const std::string& text : {reposted, ignored}) {
    CHECK(text.find("This indicates that your self-introduction may be inaccurate, incomplete, or "
                    "missing a key motivational factor that caused this action.") != std::string::npos);
    CHECK(text.find("(5) Write an updated self-introduction that: Starts with your new user type; "
                    "Describes your newfound preferences reflected in this interaction; Summarizes "
                    "any relevant retained preferences; Describes what types of news you now "
                    "dislike.") != std::string::npos);
  }
}

TEST_CASE("feature and facet renderers use the labeled semicolon form") {
  CHECK(render_news_features(demo_features()) ==
        "News Domain: politics; Sentiment: exaggerated; Structural Features: short paragraphs; "
        "Logical Consistency: contradicts itself; Source Credibility: anonymous sourcing");
  CHECK(render_style_facets(demo_style()).find("Tone: sarcastic") != std::string::npos);
  CHECK(render_style_facets(demo_style()).find("Intent: debunk") != std::string::npos);
}

TEST_CASE("comment list is numbered from one") {
  std::string one = build_style_prompt({"solo remark"}).user_text;
  CHECK(one.find("1) solo remark") != std::string::npos);
  std::string three = build_style_prompt({"a", "b", "c"}).user_text;
  CHECK(three.find("1) a 2) b 3) c") != std::string::npos);
}

TEST_CASE("profile seed prompt renders the domain histogram as percentages") {
  ChatRequest req = build_profile_init_prompt({{"politics", 3}, {"health", 1}}, "Tone: dry");
  CHECK(req.user_text.find("- politics: 75%") != std::string::npos);
  CHECK(req.user_text.find("- health: 25%") != std::string::npos);
  CHECK(req.prompt_kind == PromptKind::ProfileInit);
}

TEST_CASE("blank or missing inputs raise typed errors") {
  CHECK_THROWS_WITH_AS(build_nfe_prompt(""), doctest::Contains("EmptyArticle"), Error);
  CHECK_THROWS_WITH_AS(build_nfe_prompt("   \n\t"), doctest::Contains("EmptyArticle"), Error);
  CHECK_THROWS_WITH_AS(build_style_prompt({}), doctest::Contains("NoComments"), Error);
  CHECK_THROWS_WITH_AS(build_profile_init_prompt({}, "style"), doctest::Contains("NoHistory"), Error);
}

TEST_CASE("every prompt requests the structured block for its schema") {
  auto has_suffix = [](const ChatRequest& req) {
    return req.user_text.find("```daud:" + req.schema_id + "\n") != std::string::npos &&
           req.user_text.find("Respond with exactly one fenced block tagged daud:" + req.schema_id) !=
               std::string::npos;
  };
  CHECK(has_suffix(build_nfe_prompt(kArticle)));
  CHECK(has_suffix(build_style_prompt({"c"})));
  CHECK(has_suffix(build_engage_prompt("p", "a", demo_features())));
  CHECK(has_suffix(build_update_prompt("p", "a", demo_features(), "e", false)));
  CHECK(has_suffix(build_profile_init_prompt({{"politics", 1}}, "s")));
  CHECK(has_suffix(build_comment_prompt("p", demo_style(), "a", "s")));
}

TEST_CASE("users with no history get the fixed generic profile") {
  std::string generic = kGenericProfileText;
  CHECK(!generic.empty());
  CHECK(generic.find("regular user") != std::string::npos);
}
