#pragma once

#include "daud/jsonl.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace daud {

// Fake is the positive class everywhere (metrics, losses, reports).
enum class VeracityLabel { True = 0, Fake = 1 };

std::string label_to_string(VeracityLabel label);
VeracityLabel label_from_string(const std::string& s);

struct NewsItem {
  std::string id;
  std::string domain;
  std::string text;
  VeracityLabel label = VeracityLabel::True;
  std::optional<int64_t> timestamp;
};

struct EngagementRecord {
  std::string user_id;
  std::string news_id;
  std::string comment;
  std::optional<int64_t> timestamp;
  bool synthetic = false;
};

struct Corpus {
  std::vector<NewsItem> news;                 // file order
  std::vector<EngagementRecord> engagements;  // file order after dedupe

  std::unordered_map<std::string, size_t> news_index;  // id -> position in news

  const NewsItem* find_news(const std::string& id) const;
  const NewsItem& news_at(const std::string& id) const;  // throws DanglingReference
  std::set<std::string> domains() const;
  std::set<std::string> user_ids() const;
  // Real (non-synthetic) engagements of one user, in file order.
  std::vector<const EngagementRecord*> real_engagements_of(const std::string& user_id) const;
  void rebuild_index();
};

struct LoadStats {
  size_t duplicate_engagements_dropped = 0;
};

// JSON Lines, records tagged {"kind":"news"|"engagement"}. Duplicate (user,news)
// pairs collapse to the record with the earliest timestamp (file order breaks
// ties and stands in for missing timestamps).
Corpus load_corpus(const std::filesystem::path& path, LoadStats* stats = nullptr);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

json news_to_json(const NewsItem& item);
json engagement_to_json(const EngagementRecord& rec);

}  // namespace daud
