#pragma once

#include "daud/corpus.hpp"
#include "daud/gateway.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace daud {

// Deterministic corpus with a planted, domain-shared veracity cue:
//  - every fake item contains cue_token exactly once and every true item
//    contains decoy_token instead. The defaults hash to the same signed
//    bucket under the 256-dimension hashing encoder, so raw text embeddings
//    carry no linear veracity signal; only a reader of the raw text (the
//    rule-driven backend) can tell the two apart;
//  - each (domain, label) pair has its own style token, repeated
//    style_repeats times: a strong shortcut that never transfers;
//  - users come in triples sharing domain preferences: a spreader
//    (upholds fakes, challenges true stories), a debunker (the mirror), and
//    a casual commenter (neutral). Each comment is six tokens in distinct
//    hash buckets, so veracity lives only in the style-stance pairing and a
//    balanced spreader+debunker pair sums to the same vector for both labels:
//    mean pooling cancels it exactly, per-comment nonlinear encoders do not;
//  - triples engage every preferred-domain item on the first
//    (1 - uncovered_fraction) of the timeline, leaving a late tail whose only
//    possible engagements are augmented ones.
struct SyntheticSpec {
  size_t n_domains = 3;
  size_t news_per_domain = 24;
  size_t users = 18;  // must be a multiple of 3 (triples)
  double common_user_fraction = 0.5;  // triples with two preferred domains
  std::string cue_token = "veracue";
  std::string decoy_token = "veraplainly";
  size_t style_repeats = 3;
  size_t filler_tokens = 36;
  double uncovered_fraction = 0.25;
  uint64_t seed = 7;

  void validate() const;
  json to_json() const;
  static SyntheticSpec from_json(const json& j);
};

std::vector<std::string> synthetic_domains(size_t n);

struct SyntheticUserTruth {
  std::string user_id;
  std::string role;  // "spreader" | "debunker" | "casual"
  std::vector<std::string> preferred_domains;
};

struct SyntheticOutput {
  Corpus corpus;
  MockRuleTable rules;
  std::vector<SyntheticUserTruth> truth;
};

SyntheticOutput generate_synthetic(const SyntheticSpec& spec);

// The rule table alone (it depends only on the cue token, not the counts).
MockRuleTable synthetic_rules(const std::string& cue_token);

json synthetic_truth_to_json(const std::vector<SyntheticUserTruth>& truth);

}  // namespace daud
