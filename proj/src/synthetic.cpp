#include "acrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "acrank/io.hpp"
#include "acrank/text.hpp"

namespace acrank {
namespace {

struct TopicBank {
  const char* name;
  std::vector<const char*> heads;
};

const std::vector<TopicBank>& banks() {
  static const std::vector<TopicBank> b = {
      {"closet",
       {"hangers", "hanger organizer", "hamper", "hat rack", "shoe rack", "shelf dividers",
        "closet rod", "storage bins", "belt hanger", "scarf organizer", "garment bag",
        "coat rack", "sweater organizer", "pants hangers"}},
      {"kitchen",
       {"hand mixer", "hash brown maker", "ham slicer", "spatula set", "saucepan",
        "baking sheet", "blender", "can opener", "cutting board", "pot holders",
        "measuring cups", "skillet", "cookie sheet", "colander"}},
      {"bath",
       {"hand soap", "hand towels", "hair dryer", "shower curtain", "soap dispenser",
        "bath mat", "body wash", "shampoo", "conditioner", "bath towels", "cotton swabs",
        "scale", "toothbrush holder", "shower caddy"}},
      {"tools",
       {"hammer", "hand saw", "hex keys", "screwdriver set", "socket set", "sanding block",
        "cordless drill", "clamps", "chisel set", "pliers", "tape measure", "stud finder",
        "bit set", "circular saw"}},
      {"garden",
       {"hose", "hose nozzle", "hedge trimmer", "hand trowel", "shovel", "seeds",
        "sprinkler", "garden gloves", "planter", "compost bin", "pruning shears",
        "bird feeder", "lawn mower", "rake"}},
      {"pets",
       {"harness", "hamster cage", "hay feeder", "cat litter", "cat tree", "dog bed",
        "dog leash", "pet gate", "squeaky toys", "scratching post", "bird cage",
        "chew toys", "collar", "poop bags"}},
      {"office",
       {"highlighters", "hole punch", "headset", "stapler", "sticky notes", "binder clips",
        "computer stand", "chair mat", "pens", "paper clips", "monitor arm", "desk lamp",
        "calculator", "clipboard"}},
      {"electronics",
       {"hdmi cable", "headphones", "hard drive", "smart plug", "speaker", "usb hub",
        "charger", "phone case", "power bank", "mouse pad", "cable ties", "webcam",
        "keyboard", "batteries"}},
  };
  return b;
}

const std::vector<const char*>& modifiers() {
  static const std::vector<const char*> m = {"black", "set", "large", "small",
                                             "white", "pack", "heavy duty", "for kids"};
  return m;
}

constexpr std::int64_t kMinute = 60LL * 1000;
constexpr std::int64_t kHour = 60 * kMinute;
constexpr std::int64_t kDay = 24 * kHour;
constexpr std::int64_t kStartMs = 1'700'000'000'000LL;  // arbitrary fixed epoch

std::size_t sample_weighted(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

class Generator {
 public:
  explicit Generator(const SyntheticConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  SyntheticData run() {
    SyntheticData data;
    for (const auto& b : banks()) data.topics.emplace_back(b.name);
    build_catalog(data);
    catalog_ = &data.catalog;
    by_topic_.assign(data.topics.size(), {});
    for (std::size_t i = 0; i < data.catalog.size(); ++i) {
      by_topic_[static_cast<std::size_t>(data.catalog[i].topic)].push_back(i);
    }

    std::vector<std::int64_t> times(cfg_.sessions);
    for (auto& t : times) {
      t = kStartMs + 8 * kDay +
          static_cast<std::int64_t>(uniform01(rng_) * static_cast<double>(cfg_.days) * kDay);
    }
    std::sort(times.begin(), times.end());
    for (std::size_t s = 0; s < cfg_.sessions; ++s) {
      data.sessions.push_back(make_session(s, times[s]));
    }
    return data;
  }

 private:
  void build_catalog(SyntheticData& data) {
    const auto& mods = modifiers();
    for (std::size_t t = 0; t < banks().size(); ++t) {
      for (const char* head : banks()[t].heads) {
        std::vector<std::string> texts = {head};
        // two distinct modifiers per head
        const auto a = uniform_index(rng_, mods.size());
        auto b = uniform_index(rng_, mods.size() - 1);
        if (b >= a) ++b;
        texts.push_back(std::string(head) + " " + mods[a]);
        texts.push_back(std::string(head) + " " + mods[b]);
        for (auto& text : texts) {
          SyntheticQuery q;
          q.text = std::move(text);
          q.topic = static_cast<int>(t);
          q.base_popularity = std::exp(2.5 + 1.0 * standard_normal(rng_));
          q.price = std::exp(3.0 + 0.7 * standard_normal(rng_));
          q.trend = 0.08 * standard_normal(rng_);
          data.catalog.push_back(std::move(q));
        }
      }
    }
  }

  double day_index(std::int64_t ts) const {
    return static_cast<double>(ts - kStartMs) / static_cast<double>(kDay);
  }

  double popularity(std::size_t q, std::int64_t ts) const {
    const auto& e = (*catalog_)[q];
    const double mid = 8.0 + cfg_.days / 2.0;
    return e.base_popularity * std::exp(e.trend * (day_index(ts) - mid));
  }

  double base_utility(std::size_t q, std::int64_t ts) const {
    const auto& e = (*catalog_)[q];
    return cfg_.popularity_weight * std::log(popularity(q, ts)) +
           cfg_.price_weight * std::log(e.price) + cfg_.trend_weight * e.trend;
  }

  std::size_t draw_search(const std::vector<std::size_t>& pool, std::int64_t ts) {
    std::vector<double> w(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) w[i] = popularity(pool[i], ts);
    return pool[sample_weighted(w, rng_)];
  }

  // Top-10 displayed completions for a prefix, ordered by the logging ranker.
  std::vector<std::size_t> display(const std::string& prefix, std::int64_t ts,
                                   std::unordered_map<std::size_t, double>& jitter) {
    std::vector<std::pair<double, std::size_t>> matches;
    const auto key = canonical_prefix(prefix);
    for (std::size_t i = 0; i < catalog_->size(); ++i) {
      if (!starts_with((*catalog_)[i].text, key)) continue;
      auto it = jitter.find(i);
      if (it == jitter.end()) {
        it = jitter.emplace(i, cfg_.logging_noise * standard_normal(rng_)).first;
      }
      const double score = (1.0 - cfg_.logging_utility) * std::log(popularity(i, ts)) +
                           cfg_.logging_utility * base_utility(i, ts);
      matches.emplace_back(score + it->second, i);
    }
    std::sort(matches.begin(), matches.end(), [this](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return (*catalog_)[a.second].text < (*catalog_)[b.second].text;
    });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min<std::size_t>(kMaxDisplayDepth, matches.size()); ++i) {
      out.push_back(matches[i].second);
    }
    return out;
  }

  Impression to_impression(const std::string& prefix, const std::vector<std::size_t>& shown) const {
    Impression imp;
    imp.prefix = prefix;
    for (auto i : shown) imp.candidates.push_back((*catalog_)[i].text);
    return imp;
  }

  ACSession make_session(std::size_t index, std::int64_t ts) {
    ACSession s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%06zu", index);
    s.session_id = id;
    std::snprintf(id, sizeof(id), "u%06zu", index);
    s.user_id = id;
    s.ts_ms = ts;

    std::vector<std::size_t> everything(catalog_->size());
    for (std::size_t i = 0; i < everything.size(); ++i) everything[i] = i;

    // Older history: popularity-driven searches at distinct hours.
    const auto n_old = uniform_index(rng_, 5);
    std::vector<std::int64_t> hours;
    for (std::uint64_t i = 0; i < n_old; ++i) {
      hours.push_back(1 + static_cast<std::int64_t>(uniform_index(rng_, 7 * 24 - 1)));
    }
    std::sort(hours.rbegin(), hours.rend());
    hours.erase(std::unique(hours.begin(), hours.end()), hours.end());
    for (auto h : hours) {
      const auto when = ts - h * kHour - static_cast<std::int64_t>(uniform_index(rng_, 20)) * kMinute;
      s.past_queries.push_back({(*catalog_)[draw_search(everything, when)].text, when});
    }

    // Recent searches on one topic.
    std::optional<int> topic;
    if (uniform01(rng_) < cfg_.context_rate) {
      topic = static_cast<int>(uniform_index(rng_, by_topic_.size()));
      const auto n_recent = 1 + uniform_index(rng_, 3);
      std::int64_t when = ts;
      std::vector<PastQuery> recent;
      for (std::uint64_t i = 0; i < n_recent; ++i) {
        when -= (1 + static_cast<std::int64_t>(uniform_index(rng_, 6))) * kMinute;
        recent.push_back({(*catalog_)[draw_search(by_topic_[static_cast<std::size_t>(*topic)], when)].text, when});
      }
      std::reverse(recent.begin(), recent.end());
      for (auto& r : recent) s.past_queries.push_back(std::move(r));
    }

    std::unordered_map<std::size_t, double> jitter;
    std::optional<std::size_t> submitted;
    if (cfg_.tail_click_rate > 0.0 && uniform01(rng_) < cfg_.tail_click_rate) {
      submitted = tail_click(s, ts, jitter);
    }
    if (!submitted) submitted = intended_query_session(s, ts, topic, jitter);

    s.submitted_query = (*catalog_)[*submitted].text;
    if (uniform01(rng_) < cfg_.zero_gmv_rate) {
      s.gmv = 0.0;
    } else {
      const double v = (*catalog_)[*submitted].price * std::exp(0.3 * standard_normal(rng_));
      s.gmv = std::round(v * 100.0) / 100.0;
    }
    return s;
  }

  std::size_t intended_query_session(ACSession& s, std::int64_t ts, std::optional<int> topic,
                                     std::unordered_map<std::size_t, double>& jitter) {
    std::vector<double> w(catalog_->size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      double u = base_utility(i, ts);
      if (topic && (*catalog_)[i].topic == *topic) u += cfg_.context_weight;
      w[i] = std::exp(u);
    }
    const std::size_t target = sample_weighted(w, rng_);
    const std::string& text = (*catalog_)[target].text;
    for (std::size_t len = 1; len <= text.size(); ++len) {
      if (text[len - 1] == ' ') continue;
      const auto prefix = text.substr(0, len);
      const auto shown = display(prefix, ts, jitter);
      s.impressions.push_back(to_impression(prefix, shown));
      const auto it = std::find(shown.begin(), shown.end(), target);
      if (it == shown.end()) continue;
      const auto rank = static_cast<double>(it - shown.begin());
      if (len == text.size() || uniform01(rng_) < 0.9 * std::pow(cfg_.click_decay, rank)) break;
    }
    return target;
  }

  std::optional<std::size_t> tail_click(ACSession& s, std::int64_t ts,
                                        std::unordered_map<std::size_t, double>& jitter) {
    const auto& seed_query = (*catalog_)[uniform_index(rng_, catalog_->size())].text;
    auto len = std::min<std::size_t>(1 + uniform_index(rng_, 3), seed_query.size());
    while (len > 1 && seed_query[len - 1] == ' ') --len;
    const auto prefix = seed_query.substr(0, len);
    const auto shown = display(prefix, ts, jitter);
    if (shown.size() < 5) return std::nullopt;
    std::size_t best = shown[3 + uniform_index(rng_, shown.size() - 3)];
    if (cfg_.tail_prefers_longest) {
      best = shown[3];
      for (std::size_t r = 4; r < shown.size(); ++r) {
        const auto& cand = (*catalog_)[shown[r]].text;
        const auto& cur = (*catalog_)[best].text;
        if (cand.size() > cur.size() || (cand.size() == cur.size() && cand < cur)) best = shown[r];
      }
    }
    s.impressions.push_back(to_impression(prefix, shown));
    return best;
  }

  const SyntheticConfig& cfg_;
  Rng rng_;
  const std::vector<SyntheticQuery>* catalog_ = nullptr;
  std::vector<std::vector<std::size_t>> by_topic_;
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  return Generator(config).run();
}

std::vector<std::vector<std::string>> two_cluster_corpus(std::size_t documents,
                                                         std::size_t cluster_size,
                                                         std::size_t doc_length,
                                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> docs;
  for (std::size_t d = 0; d < documents; ++d) {
    const char* cluster = (d % 2 == 0) ? "alpha" : "beta";
    std::vector<std::string> doc;
    for (std::size_t i = 0; i < doc_length; ++i) {
      doc.push_back(std::string(cluster) + "_query_" +
                    std::to_string(uniform_index(rng, cluster_size)));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace acrank
