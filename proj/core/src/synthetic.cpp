#include "daud/synthetic.hpp"

#include "daud/errors.hpp"
#include "daud/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace daud {

namespace {

const char* kDomainNames[] = {"politics", "health", "entertainment"};

std::string fenced(const std::string& schema_id, const std::string& body) {
  return "```daud:" + schema_id + "\n" + body + "```\n";
}

std::string pad3(size_t n) {
  std::ostringstream os;
  os.width(3);
  os.fill('0');
  os << n;
  return os.str();
}

struct Triple {
  std::vector<std::string> prefs;
  std::string spreader, debunker, casual;
};

// Comments carrying the planted style/stance pair. Two words depend only on
// the style, two only on the stance, so a spreader+debunker pair covers the
// same token multiset for both labels and veracity lives purely in how style
// and stance combine within one comment. All sixteen tokens sit in distinct
// hash buckets at dimension 256, which keeps every comment at equal norm and
// makes the pairwise cancellation exact after per-comment normalization.
const char* kSpreaderFake = "STYLE:hype STANCE:uphold blasting everywhere fully backing";
const char* kSpreaderTrue = "STYLE:hype STANCE:challenge blasting everywhere doubtful shaky";
const char* kDebunkerFake = "STYLE:cite STANCE:challenge ledger registry doubtful shaky";
const char* kDebunkerTrue = "STYLE:cite STANCE:uphold ledger registry fully backing";
const char* kCasualComment = "STYLE:plain STANCE:none noted quietly for later";

std::string planted_comment(const std::string& role, VeracityLabel label) {
  bool fake = label == VeracityLabel::Fake;
  if (role == "spreader") return fake ? kSpreaderFake : kSpreaderTrue;
  if (role == "debunker") return fake ? kDebunkerFake : kDebunkerTrue;
  return kCasualComment;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_domains < 1) throw_config("InvalidSyntheticSpec", "n_domains must be positive");
  if (users % 3 != 0) {
    throw_config("InvalidSyntheticSpec",
                 "users must be a multiple of 3 (spreader/debunker/casual triples)");
  }
  if (common_user_fraction < 0.0 || common_user_fraction > 1.0) {
    throw_config("InvalidSyntheticSpec", "common_user_fraction must be in [0, 1]");
  }
  if (uncovered_fraction < 0.0 || uncovered_fraction >= 1.0) {
    throw_config("InvalidSyntheticSpec", "uncovered_fraction must be in [0, 1)");
  }
  if (cue_token.empty()) throw_config("InvalidSyntheticSpec", "cue_token must be non-empty");
  if (decoy_token.empty()) throw_config("InvalidSyntheticSpec", "decoy_token must be non-empty");
  if (cue_token.find(decoy_token) != std::string::npos ||
      decoy_token.find(cue_token) != std::string::npos) {
    throw_config("InvalidSyntheticSpec",
                 "cue_token and decoy_token must not contain each other");
  }
  if (users > 0 && news_per_domain < 4) {
    throw_config("InvalidSyntheticSpec", "need at least 4 news items per domain with users");
  }
}

json SyntheticSpec::to_json() const {
  return json{{"n_domains", n_domains},
              {"news_per_domain", news_per_domain},
              {"users", users},
              {"common_user_fraction", common_user_fraction},
              {"cue_token", cue_token},
              {"decoy_token", decoy_token},
              {"style_repeats", style_repeats},
              {"filler_tokens", filler_tokens},
              {"uncovered_fraction", uncovered_fraction},
              {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  s.n_domains = j.value("n_domains", s.n_domains);
  s.news_per_domain = j.value("news_per_domain", s.news_per_domain);
  s.users = j.value("users", s.users);
  s.common_user_fraction = j.value("common_user_fraction", s.common_user_fraction);
  s.cue_token = j.value("cue_token", s.cue_token);
  s.decoy_token = j.value("decoy_token", s.decoy_token);
  s.style_repeats = j.value("style_repeats", s.style_repeats);
  s.filler_tokens = j.value("filler_tokens", s.filler_tokens);
  s.uncovered_fraction = j.value("uncovered_fraction", s.uncovered_fraction);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

std::vector<std::string> synthetic_domains(size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    if (i < 3) {
      out.push_back(kDomainNames[i]);
    } else {
      out.push_back("domain" + std::to_string(i));
    }
  }
  return out;
}

MockRuleTable synthetic_rules(const std::string& cue_token) {
  MockRuleTable table;

  {
    MockRuleTable::Rule r;
    r.kind = "template";
    r.markers = {{"dom", R"(dom_(\w+))"}, {"topic", R"(topic_(\w+))"}};
    r.template_text = fenced(
        "nfe",
        "summary: A {dom} piece covering {topic}.\n"
        "news_domain: {dom}\n"
        "sentiment: neutral\n"
        "structural: standard newswire structure\n"
        "logical_consistency: internally consistent\n"
        "source_credibility: sources not independently verified\n");
    r.default_output = fenced(
        "nfe",
        "summary: A short news piece.\n"
        "news_domain: general\n"
        "sentiment: neutral\n"
        "structural: standard newswire structure\n"
        "logical_consistency: internally consistent\n"
        "source_credibility: sources not independently verified\n");
    table.rules["NFE"] = r;
  }

  {
    MockRuleTable::Rule r;
    r.kind = "template";
    r.markers = {{"voice", R"(STYLE:(\w+))"}};
    r.template_text = fenced(
        "style",
        "style_text: Writes in a recognizable voice_{voice} register.\n"
        "tone: voice_{voice}\n"
        "intent: engage with preferred topics\n"
        "linguistic_style: short declarative sentences\n"
        "stance_consistency: consistent across comments\n"
        "targeting_pattern: sticks to preferred domains\n");
    r.default_output = fenced(
        "style",
        "style_text: Writes brief, even-keeled comments.\n"
        "tone: measured\n"
        "intent: casual reading notes\n"
        "linguistic_style: short declarative sentences\n"
        "stance_consistency: consistent across comments\n"
        "targeting_pattern: sticks to preferred domains\n");
    table.rules["CommentStyle"] = r;
  }

  {
    MockRuleTable::Rule r;
    r.kind = "match";
    r.left = {"pref", R"(PREF:(\w+))"};
    r.right = {"dom", R"(News Domain: (\w+))"};
    r.match_output = fenced(
        "engage",
        "decision: Repost\n"
        "explanation: The article covers {dom}, which overlaps my stated interests.\n");
    r.nomatch_output = fenced(
        "engage",
        "decision: Ignore\n"
        "explanation: The article covers {dom}, outside the interests I listed.\n");
    r.default_output = fenced(
        "engage",
        "decision: Ignore\n"
        "explanation: I have no clear interest signal for this article yet.\n");
    table.rules["EngagePredict"] = r;
  }

  {
    MockRuleTable::Rule r;
    r.kind = "profile_edit";
    r.tag_marker = {"pref", R"(PREF:(\w+))"};
    r.item_marker = {"item", R"(News Domain: (\w+))"};
    r.add_phrase = "actually reposted";
    r.remove_phrase = "actually ignored";
    r.template_text = fenced(
        "profile",
        "profile: I am a regular news reader. My interests: {pref|PREF:}. "
        "I repost stories inside those interests and ignore the rest.\n");
    r.default_output = fenced(
        "profile",
        "profile: I am a regular news reader still working out my interests.\n");
    table.rules["ProfileUpdate"] = r;
  }

  {
    MockRuleTable::Rule r;
    r.kind = "template";
    r.markers = {{"dom", R"(history by news domain:\n- (\w+))"}};
    r.template_text = fenced(
        "profile",
        "profile: I am a regular news reader. My interests: PREF:{dom}. "
        "I repost stories inside those interests and ignore the rest.\n");
    r.default_output = fenced(
        "profile",
        "profile: I am a regular news reader still working out my interests.\n");
    table.rules["ProfileInit"] = r;
  }

  {
    MockRuleTable::Rule r;
    r.kind = "table";
    r.key1 = {"voice", R"(voice_(\w+))"};
    r.key2 = {"cue", "(" + cue_token + ")"};
    r.outputs = {
        {"hype|" + cue_token, fenced("comment", std::string("comment: ") + kSpreaderFake + "\n")},
        {"hype|", fenced("comment", std::string("comment: ") + kSpreaderTrue + "\n")},
        {"cite|" + cue_token, fenced("comment", std::string("comment: ") + kDebunkerFake + "\n")},
        {"cite|", fenced("comment", std::string("comment: ") + kDebunkerTrue + "\n")},
    };
    r.default_output = fenced("comment", std::string("comment: ") + kCasualComment + "\n");
    table.rules["CommentGen"] = r;
  }

  return table;
}

SyntheticOutput generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticOutput out;
  out.rules = synthetic_rules(spec.cue_token);

  const auto domains = synthetic_domains(spec.n_domains);
  const size_t total_news = spec.n_domains * spec.news_per_domain;
  std::mt19937_64 rng(spec.seed);

  // Exactly balanced labels per domain, in seeded order so no position,
  // timestamp, or engagement-count feature correlates with veracity.
  std::vector<std::vector<VeracityLabel>> label_of(spec.n_domains);
  for (size_t d = 0; d < spec.n_domains; ++d) {
    std::vector<std::string> slots;
    for (size_t j = 0; j < spec.news_per_domain; ++j) slots.push_back(pad3(j));
    deterministic_shuffle(slots, spec.seed * 1000003 + d);
    label_of[d].assign(spec.news_per_domain, VeracityLabel::True);
    for (size_t r = 0; r < spec.news_per_domain / 2; ++r) {
      label_of[d][std::stoul(slots[r])] = VeracityLabel::Fake;
    }
  }

  std::vector<size_t> per_domain_count(spec.n_domains, 0);
  for (size_t i = 0; i < total_news; ++i) {
    size_t d = i % spec.n_domains;
    size_t j = per_domain_count[d]++;
    NewsItem item;
    item.id = domains[d] + "_n" + pad3(j);
    item.domain = domains[d];
    item.label = label_of[d][j];
    item.timestamp = 1000 + static_cast<int64_t>(i) * 10;

    std::vector<std::string> tokens;
    tokens.push_back("dom_" + domains[d]);
    tokens.push_back("topic_" + domains[d] + std::to_string(j));
    std::string style = "sty_" + domains[d] + "_" +
                        (item.label == VeracityLabel::Fake ? "fake" : "true");
    for (size_t r = 0; r < spec.style_repeats; ++r) tokens.push_back(style);
    for (size_t f = 0; f < spec.filler_tokens; ++f) {
      tokens.push_back("w" + pad3(rng() % 200));
    }
    size_t pos = 2 + rng() % (tokens.size() - 1);
    const std::string& marker =
        item.label == VeracityLabel::Fake ? spec.cue_token : spec.decoy_token;
    tokens.insert(tokens.begin() + static_cast<long>(pos), marker);
    std::ostringstream text;
    for (size_t t = 0; t < tokens.size(); ++t) text << (t ? " " : "") << tokens[t];
    item.text = text.str();
    out.corpus.news.push_back(std::move(item));
  }

  // Engagement coverage stops at this news timestamp; later items form the
  // cold tail that only augmentation can reach.
  const size_t covered_per_domain = spec.news_per_domain -
      static_cast<size_t>(std::floor(spec.uncovered_fraction *
                                     static_cast<double>(spec.news_per_domain)));

  const size_t n_triples = spec.users / 3;
  const size_t common_triples =
      static_cast<size_t>(std::lround(spec.common_user_fraction * static_cast<double>(n_triples)));
  std::vector<Triple> triples;
  for (size_t t = 0; t < n_triples; ++t) {
    Triple tr;
    tr.prefs.push_back(domains[t % spec.n_domains]);
    if (t < common_triples && spec.n_domains > 1) {
      tr.prefs.push_back(domains[(t + 1) % spec.n_domains]);
    }
    std::string base = "u" + pad3(t);
    tr.spreader = base + "_spreader";
    tr.debunker = base + "_debunker";
    tr.casual = base + "_casual";
    triples.push_back(std::move(tr));
    out.truth.push_back({triples.back().spreader, "spreader", triples.back().prefs});
    out.truth.push_back({triples.back().debunker, "debunker", triples.back().prefs});
    out.truth.push_back({triples.back().casual, "casual", triples.back().prefs});
  }

  std::vector<size_t> seen_per_domain(spec.n_domains, 0);
  for (const auto& item : out.corpus.news) {
    size_t d = static_cast<size_t>(
        std::find(domains.begin(), domains.end(), item.domain) - domains.begin());
    size_t j = seen_per_domain[d]++;
    if (j >= covered_per_domain) continue;
    for (const auto& tr : triples) {
      if (std::find(tr.prefs.begin(), tr.prefs.end(), item.domain) == tr.prefs.end()) continue;
      // Casuals engage first: truncation to the most recent engagers then
      // drops neutral users before it can split a spreader+debunker pair.
      const char* roles[] = {"casual", "spreader", "debunker"};
      const std::string* ids[] = {&tr.casual, &tr.spreader, &tr.debunker};
      for (size_t k = 0; k < 3; ++k) {
        EngagementRecord rec;
        rec.user_id = *ids[k];
        rec.news_id = item.id;
        rec.comment = planted_comment(roles[k], item.label);
        rec.timestamp = *item.timestamp + static_cast<int64_t>(k) + 1;
        rec.synthetic = false;
        out.corpus.engagements.push_back(std::move(rec));
      }
    }
  }

  out.corpus.rebuild_index();
  return out;
}

json synthetic_truth_to_json(const std::vector<SyntheticUserTruth>& truth) {
  json arr = json::array();
  for (const auto& t : truth) {
    arr.push_back(json{{"user_id", t.user_id},
                       {"role", t.role},
                       {"preferred_domains", t.preferred_domains}});
  }
  return arr;
}

}  // namespace daud
