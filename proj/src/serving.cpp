#include "acrank/serving.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <numeric>

#include "acrank/text.hpp"

namespace acrank {

PrefixTrie PrefixTrie::build(const std::vector<std::pair<std::string, double>>& queries,
                             std::size_t shortlist_size) {
  std::map<std::string, double> merged;
  for (const auto& [raw, pop] : queries) {
    auto q = canonical_query(raw);
    if (q.empty()) continue;
    merged[q] += pop;
  }

  PrefixTrie trie;
  trie.shortlist_size_ = shortlist_size;
  trie.nodes_.emplace_back();
  for (auto& [q, pop] : merged) trie.entries_.push_back({q, pop});

  // Insert in global rank order; each node then fills its shortlist with the
  // first matches that reach it.
  std::vector<std::uint32_t> order(trie.entries_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& ea = trie.entries_[a];
    const auto& eb = trie.entries_[b];
    if (ea.popularity != eb.popularity) return ea.popularity > eb.popularity;
    return ea.query < eb.query;
  });

  for (std::uint32_t id : order) {
    std::uint32_t node = 0;
    auto push = [&](std::uint32_t n) {
      auto& sl = trie.nodes_[n].shortlist;
      if (shortlist_size == 0 || sl.size() < shortlist_size) sl.push_back(id);
    };
    push(node);
    for (char c : trie.entries_[id].query) {
      auto& kids = trie.nodes_[node].children;
      auto it = std::lower_bound(kids.begin(), kids.end(), c,
                                 [](const auto& p, char ch) { return p.first < ch; });
      std::uint32_t next;
      if (it != kids.end() && it->first == c) {
        next = it->second;
      } else {
        next = static_cast<std::uint32_t>(trie.nodes_.size());
        kids.insert(it, {c, next});
        trie.nodes_.emplace_back();
      }
      node = next;
      push(node);
    }
  }
  return trie;
}

std::uint32_t PrefixTrie::child(std::uint32_t node, char c) const {
  const auto& kids = nodes_[node].children;
  auto it = std::lower_bound(kids.begin(), kids.end(), c,
                             [](const auto& p, char ch) { return p.first < ch; });
  if (it == kids.end() || it->first != c) return 0;  // root is never a child
  return it->second;
}

std::vector<std::uint32_t> PrefixTrie::lookup_ids(std::string_view prefix) const {
  if (nodes_.empty()) return {};
  const auto key = canonical_prefix(prefix);
  std::uint32_t node = 0;
  for (char c : key) {
    node = child(node, c);
    if (node == 0) return {};
  }
  return nodes_[node].shortlist;
}

std::vector<std::string> PrefixTrie::lookup(std::string_view prefix) const {
  std::vector<std::string> out;
  for (auto id : lookup_ids(prefix)) out.push_back(entries_[id].query);
  return out;
}

std::vector<std::pair<std::string, double>> read_query_list(std::istream& in) {
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      out.emplace_back(line, 1.0);
      continue;
    }
    try {
      std::size_t used = 0;
      const auto field = line.substr(tab + 1);
      const double pop = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing text");
      out.emplace_back(line.substr(0, tab), pop);
    } catch (const std::exception&) {
      throw std::runtime_error("query list line " + std::to_string(lineno) +
                               ": bad popularity");
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> queries_from_stats(const StatsStore& stats) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [q, s] : stats.entries()) out.emplace_back(q, s.decayed_popularity);
  return out;
}

// ---- session context ---------------------------------------------------------

SessionContextStore::SessionContextStore(std::size_t capacity, std::int64_t ttl_ms,
                                         Clock clock)
    : capacity_(capacity), ttl_ms_(ttl_ms), clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  for (std::size_t i = 0; i < kShards; ++i) shards_.push_back(std::make_unique<Shard>());
}

SessionContextStore::Shard& SessionContextStore::shard(const std::string& session_id) const {
  return *shards_[fnv1a64(session_id) % kShards];
}

void SessionContextStore::evict(std::deque<PastQuery>& q, std::int64_t now) const {
  while (!q.empty() && q.front().ts_ms < now - ttl_ms_) q.pop_front();
  while (q.size() > capacity_) q.pop_front();
}

void SessionContextStore::record(const std::string& session_id, std::string query) {
  auto& s = shard(session_id);
  std::lock_guard lock(s.mu);
  // Stamp under the lock so concurrent appends to one session stay in time order.
  const auto now = clock_();
  auto& q = s.sessions[session_id];
  q.push_back({std::move(query), now});
  evict(q, now);
}

void SessionContextStore::record(const std::string& session_id, std::string query,
                                 std::int64_t ts_ms) {
  auto& s = shard(session_id);
  std::lock_guard lock(s.mu);
  auto& q = s.sessions[session_id];
  const auto at = std::upper_bound(q.begin(), q.end(), ts_ms,
                                   [](std::int64_t t, const PastQuery& p) { return t < p.ts_ms; });
  q.insert(at, {std::move(query), ts_ms});
  evict(q, clock_());
  if (q.empty()) s.sessions.erase(session_id);
}

std::vector<PastQuery> SessionContextStore::snapshot(const std::string& session_id) const {
  auto& s = shard(session_id);
  std::lock_guard lock(s.mu);
  auto it = s.sessions.find(session_id);
  if (it == s.sessions.end()) return {};
  evict(it->second, clock_());
  std::vector<PastQuery> out(it->second.rbegin(), it->second.rend());
  if (it->second.empty()) s.sessions.erase(it);
  return out;
}

std::size_t SessionContextStore::session_count() const {
  std::size_t n = 0;
  for (const auto& s : shards_) {
    std::lock_guard lock(s->mu);
    n += s->sessions.size();
  }
  return n;
}

// ---- suggest -----------------------------------------------------------------

SuggestService::SuggestService(std::shared_ptr<const PrefixTrie> trie,
                               std::vector<std::shared_ptr<const Ranker>> rankers,
                               std::shared_ptr<SessionContextStore> context,
                               std::string default_ranker, std::string model_version)
    : trie_(std::move(trie)),
      context_(std::move(context)),
      default_ranker_(std::move(default_ranker)),
      model_version_(std::move(model_version)) {
  for (auto& r : rankers) {
    auto id = r->id();
    if (rankers_.count(id)) throw std::invalid_argument("duplicate ranker id: " + id);
    order_.push_back(id);
    rankers_.emplace(std::move(id), std::move(r));
  }
  if (!rankers_.count(default_ranker_)) throw UnknownRanker(default_ranker_);
}

std::vector<std::string> SuggestService::ranker_ids() const { return order_; }

SuggestResponse SuggestService::suggest(std::string_view prefix, const std::string& session_id,
                                        std::size_t k, const std::string& ranker_id) const {
  const auto start = std::chrono::steady_clock::now();
  const auto& id = ranker_id.empty() ? default_ranker_ : ranker_id;
  auto it = rankers_.find(id);
  if (it == rankers_.end()) throw UnknownRanker(id);

  const auto candidates = trie_->lookup(prefix);
  const auto past = context_->snapshot(session_id);
  const RankRequest request{prefix, candidates, past, context_->now()};
  auto ranked = it->second->rank(request);

  SuggestResponse resp;
  resp.ranker_id = id;
  if (ranked.size() > k) ranked.resize(k);
  resp.suggestions = std::move(ranked);
  resp.latency_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return resp;
}

void SuggestService::record_submission(const std::string& session_id,
                                       const std::string& query) {
  const auto q = canonical_query(query);
  if (q.empty()) return;
  context_->record(session_id, q);
}

}  // namespace acrank
