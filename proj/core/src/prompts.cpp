#include "daud/prompts.hpp"

#include "daud/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace daud {

const char* const kGenericProfileText =
    "I am a regular user. I occasionally browse news across domains and have no strong "
    "preferences yet: there is no particular type of news I consistently like or dislike.";

namespace {

ChatRequest make_request(PromptKind kind, std::string system_text, std::string user_text) {
  ChatRequest req;
  req.prompt_kind = kind;
  req.schema_id = schema_for(kind).id;
  req.system_text = std::move(system_text);
  req.user_text = std::move(user_text) + output_suffix(schema_for(kind));
  return req;
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

}  // namespace

std::string render_news_features(const NewsFeatures& f) {
  return "News Domain: " + f.news_domain + "; Sentiment: " + f.sentiment +
         "; Structural Features: " + f.structural + "; Logical Consistency: " +
         f.logical_consistency + "; Source Credibility: " + f.source_credibility;
}

std::string render_style_facets(const StyleFacets& f) {
  return "Tone: " + f.tone + "\nIntent: " + f.intent + "\nLinguistic Style: " +
         f.linguistic_style + "\nStance Consistency: " + f.stance_consistency +
         "\nTargeting Pattern: " + f.targeting_pattern;
}

ChatRequest build_nfe_prompt(const std::string& article_text) {
  if (is_blank(article_text)) throw_data("EmptyArticle", "news text is empty");
  std::ostringstream body;
  body << "Recently, the user browsed a news article, its article content is: " << article_text
       << ".\n\n"
       << "Your task is to analyze the content of the news text and then summarize the "
          "characteristics of true and fake information within the news.\n\n"
       << "Follow these steps:\n\n"
       << "(1) Identify and ignore website noise, such as ads, image captions, or unrelated "
          "links.\n\n"
       << "(2) Analyze the news text based on: News Domain, Sentiment (e.g., neutral, emotional, "
          "exaggerated), Structural Features, Logical Consistency, Source Credibility (Check "
          "sources of quotes and be suspicious).";
  return make_request(PromptKind::Nfe, "", body.str());
}

ChatRequest build_style_prompt(const std::vector<std::string>& comments) {
  if (comments.empty()) throw_data("NoComments", "user has no comments to analyze");
  std::ostringstream list;
  for (size_t i = 0; i < comments.size(); ++i) {
    if (i) list << ' ';
    list << (i + 1) << ") " << single_line(comments[i]);
  }
  std::ostringstream body;
  body << "Recently, the user has posted multiple comments on different news articles, the "
          "comments are listed as follows: "
       << list.str()
       << ". Your task is to analyze these comments and summarize the user’s typical tone "
          "and commenting style.\n\n"
       << "Follow these steps:\n\n"
       << "(1) Identify and ignore parts of the comments that are formulaic (e.g., hashtags, "
          "URLs, emojis, or repost tags) unless they contribute meaningfully to the tone.\n\n"
       << "(2) Analyze the comments based on: Tone (e.g., sarcastic, sincere, angry, humorous, "
          "accusatory, supportive); Intent (e.g., inform, provoke, agree, debunk, mock); "
          "Linguistic Style (e.g., formal, casual, concise, emotionally charged, rhetorical); "
          "Stance Consistency (e.g., does the user consistently take a certain side or shift "
          "based on domain or content); Targeting Pattern (e.g., does the user address "
          "individuals, institutions, abstract ideas, or the public).";
  return make_request(PromptKind::CommentStyle, "", body.str());
}

ChatRequest build_engage_prompt(const std::string& profile_text, const std::string& article_text,
                                const NewsFeatures& features) {
  std::ostringstream body;
  body << "Here is your self-introduction about what type of user you are as well as the types "
          "and characteristics of news you like or dislike engaging with: "
       << profile_text
       << ". You are now evaluating whether to repost the following news article based on this "
          "user’s perspective: "
       << article_text << "; Its news features are: " << render_news_features(features) << ".\n\n"
       << "Follow these steps:\n\n"
       << "(1) Review your self-introduction to identify the user type, news types you prefer "
          "and dislike;\n\n"
       << "(2) Analyze the features of the news article (e.g., News Domain; Sentiment; "
          "Structural Features; Logical Consistency; and Source Credibility);\n\n"
       << "(3) Assess whether these features align or conflict with your preferences;\n\n"
       << "(4) Decide whether to Repost or Ignore the news. Provide a detailed explanation that "
          "connects your decision to your self-introduction and the news features.";
  return make_request(
      PromptKind::EngagePredict,
      "You are simulating the behavior of a Twitter (X) user, who is either a regular user, a "
      "debunking user, or a malicious user (e.g., spammer or troll).",
      body.str());
}

ChatRequest build_update_prompt(const std::string& profile_text, const std::string& article_text,
                                const NewsFeatures& features, const std::string& explanation,
                                bool predicted_repost) {
  const char* predicted = predicted_repost ? "repost" : "ignore";
  const char* actually = predicted_repost ? "ignored" : "reposted";
  std::ostringstream body;
  body << "Here is your current self-introduction describing your user type and the types and "
          "characteristics of news you like or dislike engaging with: "
       << profile_text << ". Recently, you predicted that this user would " << predicted
       << " the following news article: " << article_text
       << "; Its news features are: " << render_news_features(features)
       << "; Your explanation was: " << explanation << ".\n\n"
       << "However, the user actually " << actually << " the news article.\n\n"
       << "This indicates that your self-introduction may be inaccurate, incomplete, or missing "
          "a key motivational factor that caused this action. Your task is to revise your "
          "self-introduction so that it can explain the "
       << (predicted_repost ? "ignoring" : "reposting")
       << " behavior naturally and accurately. Follow these steps:\n\n";
  if (predicted_repost) {
    body << "(1) Identify what you overlooked or misunderstood about the news article that led "
            "to the ignoring;\n\n"
         << "(2) Analyze what features of the article (i.e., news domain; sentiment; structural "
            "features; logical consistency; and source credibility) may have made the item "
            "unattractive to the user;\n\n";
  } else {
    body << "(1) Identify what you overlooked or misunderstood about the news article that led "
            "to the repost;\n\n"
         << "(2) Analyze what features of the article (i.e., news domain; sentiment; structural "
            "features; logical consistency; and source credibility) may motivate the user to "
            "repost it;\n\n";
  }
  body << "(3) Consider how your user type or value system may need to be updated to reflect "
          "this motivation.\n\n"
       << "(4) Decide which past preferences should be retained, revised, or discarded to avoid "
          "future contradiction;\n\n"
       << "(5) Write an updated self-introduction that: Starts with your new user type; "
          "Describes your newfound preferences reflected in this interaction; Summarizes any "
          "relevant retained preferences; Describes what types of news you now dislike.";
  return make_request(PromptKind::ProfileUpdate, "", body.str());
}

ChatRequest build_profile_init_prompt(const std::vector<DomainShare>& history,
                                      const std::string& style_text) {
  if (history.empty()) throw_data("NoHistory", "profile initialization needs engagement history");
  size_t total = 0;
  for (const auto& h : history) total += h.count;
  std::vector<DomainShare> sorted = history;
  std::sort(sorted.begin(), sorted.end(), [](const DomainShare& a, const DomainShare& b) {
    return a.count != b.count ? a.count > b.count : a.domain < b.domain;
  });

  std::ostringstream body;
  body << "Write a first-person self-introduction for this user describing their user type and "
          "the types and characteristics of news they like or dislike engaging with.\n\n"
       << "Their engagement history by news domain:\n";
  for (const auto& h : sorted) {
    long pct = std::lround(100.0 * static_cast<double>(h.count) / static_cast<double>(total));
    body << "- " << h.domain << ": " << pct << "%\n";
  }
  body << "\nTheir commenting style: " << (style_text.empty() ? "not yet profiled" : style_text)
       << ".\n\nLead with the dominant domain and keep the introduction short.";
  return make_request(PromptKind::ProfileInit,
                      "You maintain a first-person self-introduction for a social media user.",
                      body.str());
}

ChatRequest build_comment_prompt(const std::string& profile_text, const StyleFacets& style,
                                 const std::string& article_text, const std::string& summary) {
  std::ostringstream body;
  body << "This is your self-introduction: " << profile_text << ".\n\n"
       << "Your commenting style:\n" << render_style_facets(style) << "\n\n"
       << "You just read this news article: " << article_text
       << ". Its summary is: " << summary << ".\n\n"
       << "Write one comment (≤ 280 characters) consistent with the Tone, Intent, and "
          "Linguistic Style above.";
  return make_request(PromptKind::CommentGen,
                      "You write a short social-media comment in this user's voice", body.str());
}

}  // namespace daud
