#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "acrank/feature_pipeline.hpp"
#include "acrank/ranking.hpp"

namespace acrank {

struct PopularityEntry {
  double decayed_popularity = 0.0;
  double decayed_gmv = 0.0;
};

// Immutable after construction; lookups use canonical_query keys.
class PopularityIndex {
 public:
  PopularityIndex() = default;
  explicit PopularityIndex(const StatsStore& stats);

  void set(std::string_view query, PopularityEntry entry);
  PopularityEntry get(std::string_view query) const;  // zeros when absent
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, PopularityEntry, std::less<>> entries_;
};

// MostPopularCompletion: decayed popularity descending, ties lexicographic.
RankedList mpc_rank(const std::vector<std::string>& candidates,
                    const PopularityIndex& index);
// MostPopularGMVCompletion: decayed GMV descending, ties lexicographic.
RankedList mpgc_rank(const std::vector<std::string>& candidates,
                     const PopularityIndex& index);

}  // namespace acrank
