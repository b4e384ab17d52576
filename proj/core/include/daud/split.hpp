#pragma once

#include "daud/corpus.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace daud {

enum class EvalSetting { General, Unseen };

std::string setting_to_string(EvalSetting s);
EvalSetting setting_from_string(const std::string& s);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

// Seeded Fisher-Yates, identical across platforms (std::shuffle is not).
void deterministic_shuffle(std::vector<std::string>& ids, uint64_t seed);

struct SplitPlan {
  EvalSetting setting = EvalSetting::General;
  std::string target_domain;
  uint64_t seed = 0;
  std::vector<std::string> train;  // news ids, sorted
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Stratified by label within each domain; deterministic for a fixed seed.
// General: every domain is split by the ratios, test keeps only the target
// domain's share. Unseen: train/val stratify the non-target items (ratios
// renormalized over train+val) and test is all of the target domain.
SplitPlan build_split(const Corpus& corpus, EvalSetting setting, const std::string& target_domain,
                      const SplitRatios& ratios, uint64_t seed);

// Users engaging at least one news item of the given domains (real engagements).
std::set<std::string> users_of_domains(const Corpus& corpus, const std::set<std::string>& domains);
std::set<std::string> common_users(const std::set<std::string>& a, const std::set<std::string>& b);

// Throws InvariantViolation on any leakage or malformed plan. The Unseen check
// is the one the evaluation harness runs before every training.
void check_split_leakage(const SplitPlan& plan, const Corpus& corpus);

json split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const json& j);

}  // namespace daud
