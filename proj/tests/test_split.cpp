#include "daud/errors.hpp"
#include "daud/split.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>

using namespace daud;

namespace {

Corpus grid_corpus(size_t domains, size_t per_domain, uint64_t seed = 3) {
  Corpus c;
  std::mt19937_64 rng(seed);
  for (size_t d = 0; d < domains; ++d) {
    std::string dom = "dom" + std::to_string(d);
    for (size_t j = 0; j < per_domain; ++j) {
      NewsItem item;
      item.id = dom + "_" + std::to_string(j);
      item.domain = dom;
      item.label = (j % 2 == 0) ? VeracityLabel::Fake : VeracityLabel::True;
      item.timestamp = static_cast<int64_t>(rng() % 1000);
      item.text = "text";
      c.news.push_back(item);
    }
  }
  c.rebuild_index();
  return c;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("unseen split holds out the whole target domain") {
  Corpus c = grid_corpus(3, 20);
  SplitPlan plan = build_split(c, EvalSetting::Unseen, "dom1", SplitRatios{}, 7);

  CHECK(plan.test.size() == 20);
  for (const auto& id : plan.test) CHECK(c.news_at(id).domain == "dom1");
  for (const auto& id : plan.train) CHECK(c.news_at(id).domain != "dom1");
  for (const auto& id : plan.val) CHECK(c.news_at(id).domain != "dom1");
  CHECK(plan.train.size() + plan.val.size() == 40);

  // Ratios renormalize over train+val per (domain, label) stratum:
  // floor(0.7/0.8 * 10) = 8 train per stratum, 2 val, over 4 strata.
  CHECK(plan.train.size() == 32);
  CHECK(plan.val.size() == 8);
  check_split_leakage(plan, c);
}

TEST_CASE("general split keeps only the target share in test") {
  Corpus c = grid_corpus(3, 20);
  SplitPlan plan = build_split(c, EvalSetting::General, "dom2", SplitRatios{}, 7);
  for (const auto& id : plan.test) CHECK(c.news_at(id).domain == "dom2");
  // train/val still mix every domain
  std::set<std::string> train_domains;
  for (const auto& id : plan.train) train_domains.insert(c.news_at(id).domain);
  CHECK(train_domains.size() == 3);
  check_split_leakage(plan, c);
}

TEST_CASE("splits are deterministic in the seed and disjoint") {
  Corpus c = grid_corpus(4, 16);
  for (uint64_t seed : {1ull, 2ull, 99ull}) {
    SplitPlan a = build_split(c, EvalSetting::Unseen, "dom0", SplitRatios{}, seed);
    SplitPlan b = build_split(c, EvalSetting::Unseen, "dom0", SplitRatios{}, seed);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    std::set<std::string> seen;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
      for (const auto& id : *part) {
        CHECK(seen.insert(id).second);
      }
    }
    CHECK(seen.size() == c.news.size());
  }
  SplitPlan a = build_split(c, EvalSetting::Unseen, "dom0", SplitRatios{}, 1);
  SplitPlan b = build_split(c, EvalSetting::Unseen, "dom0", SplitRatios{}, 2);
  CHECK(a.train != b.train);  // different seeds move items
}

TEST_CASE("stratification keeps label balance per domain") {
  Corpus c = grid_corpus(2, 40);  // 20 fake / 20 true per domain
  SplitPlan plan = build_split(c, EvalSetting::General, "dom0", SplitRatios{}, 13);
  size_t fake = 0, total = 0;
  for (const auto& id : plan.train) {
    fake += c.news_at(id).label == VeracityLabel::Fake ? 1 : 0;
    ++total;
  }
  // 0.7 of each 20-item stratum per domain: exactly 14 fake + 14 true each.
  CHECK(fake * 2 == total);
}

TEST_CASE("leakage checker rejects poisoned plans") {
  Corpus c = grid_corpus(3, 10);
  SplitPlan plan = build_split(c, EvalSetting::Unseen, "dom1", SplitRatios{}, 5);

  SplitPlan poisoned = plan;
  poisoned.train.push_back(poisoned.test.front());
  CHECK_THROWS_AS(check_split_leakage(poisoned, c), Error);

  poisoned = plan;
  poisoned.train.push_back("dom1_0");  // target-domain item in train
  std::sort(poisoned.train.begin(), poisoned.train.end());
  poisoned.train.erase(std::unique(poisoned.train.begin(), poisoned.train.end()),
                       poisoned.train.end());
  CHECK_THROWS_AS(check_split_leakage(poisoned, c), Error);

  poisoned = plan;
  poisoned.val.push_back(poisoned.val.front());  // duplicate inside a fold
  CHECK_THROWS_AS(check_split_leakage(poisoned, c), Error);

  poisoned = plan;
  poisoned.test.push_back("ghost");
  CHECK_THROWS_AS(check_split_leakage(poisoned, c), Error);

  try {
    poisoned = plan;
    poisoned.train.push_back(poisoned.test.front());
    check_split_leakage(poisoned, c);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Invariant);
    CHECK(exit_code_for(e.kind()) == 5);
  }
}

TEST_CASE("unseen needs at least two domains") {
  Corpus c = grid_corpus(1, 10);
  CHECK_THROWS_AS(build_split(c, EvalSetting::Unseen, "dom0", SplitRatios{}, 1), Error);
}

TEST_CASE("unknown target domain is rejected") {
  Corpus c = grid_corpus(2, 10);
  CHECK_THROWS_AS(build_split(c, EvalSetting::Unseen, "nope", SplitRatios{}, 1), Error);
}

TEST_CASE("plan json round-trip") {
  Corpus c = grid_corpus(3, 12);
  SplitPlan plan = build_split(c, EvalSetting::Unseen, "dom2", SplitRatios{}, 21);
  SplitPlan back = split_plan_from_json(split_plan_to_json(plan));
  CHECK(back.setting == plan.setting);
  CHECK(back.target_domain == plan.target_domain);
  CHECK(back.seed == plan.seed);
  CHECK(back.train == plan.train);
  CHECK(back.val == plan.val);
  CHECK(back.test == plan.test);
}

TEST_CASE("deterministic_shuffle is stable and permutes") {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("id" + std::to_string(i));
  std::vector<std::string> a = ids, b = ids;
  deterministic_shuffle(a, 17);
  deterministic_shuffle(b, 17);
  CHECK(a == b);
  CHECK(a != ids);
  CHECK(as_set(a) == as_set(ids));
}

TEST_CASE("users_of_domains and common_users") {
  Corpus c = grid_corpus(2, 4);
  c.engagements.push_back({"u1", "dom0_0", "", 1, false});
  c.engagements.push_back({"u1", "dom1_0", "", 2, false});
  c.engagements.push_back({"u2", "dom0_1", "", 3, false});
  c.engagements.push_back({"u3", "dom1_1", "", 4, true});  // synthetic does not count
  c.rebuild_index();

  auto d0 = users_of_domains(c, {"dom0"});
  auto d1 = users_of_domains(c, {"dom1"});
  CHECK(d0 == std::set<std::string>{"u1", "u2"});
  CHECK(d1 == std::set<std::string>{"u1"});
  CHECK(common_users(d0, d1) == std::set<std::string>{"u1"});
}
