#include "acrank/baseline_rankers.hpp"

#include <algorithm>

#include "acrank/text.hpp"

namespace acrank {

PopularityIndex::PopularityIndex(const StatsStore& stats) {
  for (const auto& [query, s] : stats.entries()) {
    entries_[query] = {s.decayed_popularity, s.decayed_gmv};
  }
}

void PopularityIndex::set(std::string_view query, PopularityEntry entry) {
  entries_[canonical_query(query)] = entry;
}

PopularityEntry PopularityIndex::get(std::string_view query) const {
  auto it = entries_.find(canonical_query(query));
  return it == entries_.end() ? PopularityEntry{} : it->second;
}

namespace {

template <typename Key>
RankedList rank_by(const std::vector<std::string>& candidates, const PopularityIndex& index,
                   Key key) {
  RankedList out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back({c, key(index.get(c))});
  std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.query < b.query;
  });
  return out;
}

}  // namespace

RankedList mpc_rank(const std::vector<std::string>& candidates,
                    const PopularityIndex& index) {
  return rank_by(candidates, index,
                 [](const PopularityEntry& e) { return e.decayed_popularity; });
}

RankedList mpgc_rank(const std::vector<std::string>& candidates,
                     const PopularityIndex& index) {
  return rank_by(candidates, index, [](const PopularityEntry& e) { return e.decayed_gmv; });
}

}  // namespace acrank
