#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "acrank/rankers.hpp"
#include "acrank/ranking.hpp"
#include "acrank/session_corpus.hpp"

namespace acrank {

// Character-keyed tree over canonical queries. Every node keeps the ids of
// the best matches below it (popularity descending, then query), capped at
// shortlist_size; a cap of 0 keeps every match.
class PrefixTrie {
 public:
  static constexpr std::size_t kDefaultShortlist = 50;

  struct Entry {
    std::string query;
    double popularity = 0.0;
  };

  // Queries are canonicalized; repeated queries are merged with their
  // popularity summed. Empty queries are ignored.
  static PrefixTrie build(const std::vector<std::pair<std::string, double>>& queries,
                          std::size_t shortlist_size = kDefaultShortlist);

  std::vector<std::string> lookup(std::string_view prefix) const;
  std::vector<std::uint32_t> lookup_ids(std::string_view prefix) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t shortlist_size() const { return shortlist_size_; }
  const Entry& entry(std::uint32_t id) const { return entries_[id]; }

 private:
  struct Node {
    std::vector<std::pair<char, std::uint32_t>> children;  // sorted by char
    std::vector<std::uint32_t> shortlist;
  };

  std::uint32_t child(std::uint32_t node, char c) const;

  std::vector<Node> nodes_;
  std::vector<Entry> entries_;
  std::size_t shortlist_size_ = kDefaultShortlist;
};

// Tab-separated "query<TAB>popularity" lines (popularity optional, default 1).
std::vector<std::pair<std::string, double>> read_query_list(std::istream& in);
std::vector<std::pair<std::string, double>> queries_from_stats(const StatsStore& stats);

// Per-session ring buffer of the last K submissions. Entries older than the
// TTL are dropped whenever the session is touched.
class SessionContextStore {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit SessionContextStore(std::size_t capacity = 3,
                               std::int64_t ttl_ms = 30LL * 60 * 1000,
                               Clock clock = {});

  void record(const std::string& session_id, std::string query);
  void record(const std::string& session_id, std::string query, std::int64_t ts_ms);
  // Newest first.
  std::vector<PastQuery> snapshot(const std::string& session_id) const;
  std::size_t session_count() const;
  std::int64_t now() const { return clock_(); }

 private:
  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<std::string, std::deque<PastQuery>> sessions;
  };
  static constexpr std::size_t kShards = 16;

  Shard& shard(const std::string& session_id) const;
  void evict(std::deque<PastQuery>& q, std::int64_t now) const;

  std::size_t capacity_;
  std::int64_t ttl_ms_;
  Clock clock_;
  mutable std::vector<std::unique_ptr<Shard>> shards_;
};

class UnknownRanker : public std::invalid_argument {
 public:
  explicit UnknownRanker(const std::string& id)
      : std::invalid_argument("unknown ranker: " + id) {}
};

struct SuggestResponse {
  std::vector<RankedItem> suggestions;
  std::string ranker_id;
  double latency_ms = 0.0;
};

class SuggestService {
 public:
  SuggestService(std::shared_ptr<const PrefixTrie> trie,
                 std::vector<std::shared_ptr<const Ranker>> rankers,
                 std::shared_ptr<SessionContextStore> context,
                 std::string default_ranker, std::string model_version);

  SuggestResponse suggest(std::string_view prefix, const std::string& session_id,
                          std::size_t k, const std::string& ranker_id) const;
  void record_submission(const std::string& session_id, const std::string& query);

  std::vector<std::string> ranker_ids() const;
  const std::string& default_ranker() const { return default_ranker_; }
  const std::string& model_version() const { return model_version_; }
  SessionContextStore& context() { return *context_; }

 private:
  std::shared_ptr<const PrefixTrie> trie_;
  std::map<std::string, std::shared_ptr<const Ranker>> rankers_;
  std::vector<std::string> order_;
  std::shared_ptr<SessionContextStore> context_;
  std::string default_ranker_;
  std::string model_version_;
};

}  // namespace acrank
