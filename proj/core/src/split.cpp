#include "daud/split.hpp"

#include "daud/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace daud {

std::string setting_to_string(EvalSetting s) {
  return s == EvalSetting::Unseen ? "unseen" : "general";
}

EvalSetting setting_from_string(const std::string& s) {
  if (s == "unseen") return EvalSetting::Unseen;
  if (s == "general") return EvalSetting::General;
  throw_config("UnknownSetting", "setting '" + s + "'");
}

// std::shuffle is implementation-defined; explicit Fisher-Yates keeps plans
// identical across platforms for a given seed.
void deterministic_shuffle(std::vector<std::string>& ids, std::mt19937_64& rng) {
  for (size_t i = ids.size(); i > 1; --i) {
    size_t j = rng() % i;
    std::swap(ids[i - 1], ids[j]);
  }
}

void deterministic_shuffle(std::vector<std::string>& ids, uint64_t seed) {
  std::mt19937_64 rng(seed);
  deterministic_shuffle(ids, rng);
}

namespace {

void validate_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw_config("InvalidRatios", "split ratios must be nonnegative and sum to 1");
  }
}

}  // namespace

SplitPlan build_split(const Corpus& corpus, EvalSetting setting, const std::string& target_domain,
                      const SplitRatios& ratios, uint64_t seed) {
  validate_ratios(ratios);
  std::set<std::string> domains = corpus.domains();
  if (!domains.count(target_domain)) {
    throw_data("UnknownDomain", "target domain '" + target_domain + "'");
  }
  if (domains.size() < 2) {
    throw_data("NoSourceDomain", "corpus has no domain besides '" + target_domain + "'");
  }

  // (domain, label) strata in a fixed iteration order.
  std::map<std::pair<std::string, int>, std::vector<std::string>> strata;
  for (const auto& d : domains) {
    strata[{d, 0}];
    strata[{d, 1}];
  }
  for (const auto& n : corpus.news) {
    strata[{n.domain, static_cast<int>(n.label)}].push_back(n.id);
  }

  std::mt19937_64 rng(seed);
  SplitPlan plan;
  plan.setting = setting;
  plan.target_domain = target_domain;
  plan.seed = seed;

  for (auto& [key, ids] : strata) {
    const auto& [domain, label] = key;
    bool stratified = (setting == EvalSetting::General) || (domain != target_domain);
    if (stratified && ids.empty()) {
      throw_data("EmptyClass", "domain '" + domain + "' has no '" +
                                   label_to_string(static_cast<VeracityLabel>(label)) + "' items");
    }
    std::sort(ids.begin(), ids.end());
    deterministic_shuffle(ids, rng);

    if (setting == EvalSetting::General) {
      size_t n_train = static_cast<size_t>(std::floor(ratios.train * ids.size()));
      size_t n_val = static_cast<size_t>(std::floor(ratios.val * ids.size()));
      for (size_t i = 0; i < ids.size(); ++i) {
        if (i < n_train) {
          plan.train.push_back(ids[i]);
        } else if (i < n_train + n_val) {
          plan.val.push_back(ids[i]);
        } else if (domain == target_domain) {
          plan.test.push_back(ids[i]);
        }
        // Non-target test shares are left out of the plan entirely.
      }
    } else {
      if (domain == target_domain) {
        for (auto& id : ids) plan.test.push_back(id);
      } else {
        double train_share = ratios.train / (ratios.train + ratios.val);
        size_t n_train = static_cast<size_t>(std::floor(train_share * ids.size()));
        for (size_t i = 0; i < ids.size(); ++i) {
          (i < n_train ? plan.train : plan.val).push_back(ids[i]);
        }
      }
    }
  }

  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.val.begin(), plan.val.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

std::set<std::string> users_of_domains(const Corpus& corpus, const std::set<std::string>& domains) {
  std::set<std::string> out;
  for (const auto& e : corpus.engagements) {
    if (e.synthetic) continue;
    if (domains.count(corpus.news_at(e.news_id).domain)) out.insert(e.user_id);
  }
  return out;
}

std::set<std::string> common_users(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
  return out;
}

void check_split_leakage(const SplitPlan& plan, const Corpus& corpus) {
  auto check_ids = [&](const std::vector<std::string>& ids, const char* part) {
    for (const auto& id : ids) {
      if (!corpus.find_news(id)) {
        throw_invariant("InvariantViolation",
                        std::string(part) + " references unknown news id '" + id + "'");
      }
    }
  };
  check_ids(plan.train, "train");
  check_ids(plan.val, "val");
  check_ids(plan.test, "test");

  auto to_set = [](const std::vector<std::string>& ids, const char* part) {
    std::set<std::string> out;
    for (const auto& id : ids) {
      if (!out.insert(id).second) {
        throw_invariant("InvariantViolation",
                        "id '" + id + "' appears twice in " + std::string(part));
      }
    }
    return out;
  };
  std::set<std::string> train = to_set(plan.train, "train");
  std::set<std::string> val = to_set(plan.val, "val");
  std::set<std::string> test = to_set(plan.test, "test");
  for (const auto& id : val) {
    if (train.count(id)) throw_invariant("InvariantViolation", "id '" + id + "' in train and val");
  }
  for (const auto& id : test) {
    if (train.count(id)) throw_invariant("InvariantViolation", "id '" + id + "' in train and test");
    if (val.count(id)) throw_invariant("InvariantViolation", "id '" + id + "' in val and test");
  }

  if (plan.setting == EvalSetting::Unseen) {
    for (const auto& id : plan.train) {
      if (corpus.news_at(id).domain == plan.target_domain) {
        throw_invariant("InvariantViolation", "target-domain id '" + id + "' leaked into train");
      }
    }
    for (const auto& id : plan.val) {
      if (corpus.news_at(id).domain == plan.target_domain) {
        throw_invariant("InvariantViolation", "target-domain id '" + id + "' leaked into val");
      }
    }
  }
  for (const auto& id : plan.test) {
    if (corpus.news_at(id).domain != plan.target_domain) {
      throw_invariant("InvariantViolation", "non-target id '" + id + "' in test");
    }
  }
}

json split_plan_to_json(const SplitPlan& plan) {
  return json{{"setting", setting_to_string(plan.setting)},
              {"target", plan.target_domain},
              {"seed", plan.seed},
              {"train", plan.train},
              {"val", plan.val},
              {"test", plan.test}};
}

SplitPlan split_plan_from_json(const json& j) {
  SplitPlan plan;
  plan.setting = setting_from_string(j.at("setting").get<std::string>());
  plan.target_domain = j.at("target").get<std::string>();
  plan.seed = j.at("seed").get<uint64_t>();
  plan.train = j.at("train").get<std::vector<std::string>>();
  plan.val = j.at("val").get<std::vector<std::string>>();
  plan.test = j.at("test").get<std::vector<std::string>>();
  return plan;
}

}  // namespace daud
