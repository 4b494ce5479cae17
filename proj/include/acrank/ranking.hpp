#pragma once

#include <string>
#include <vector>

namespace acrank {

struct RankedItem {
  std::string query;
  double score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

// Candidates in final display order, best first.
using RankedList = std::vector<RankedItem>;

}  // namespace acrank
