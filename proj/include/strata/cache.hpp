#pragma once

// Scored cache of object shapes and sprites, keyed by (id, generation, kind).

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <variant>
#include <vector>

#include "strata/pixelset.hpp"
#include "strata/scene.hpp"
#include "strata/sprite.hpp"

namespace strata {

enum class CacheKind { Shape, MinShape, Sprite };

struct CacheKey {
  ObjectId id;
  Generation generation = 0;
  CacheKind kind = CacheKind::Shape;
  friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

/// A sprite valid over `computed`, the pixels it has been rasterized for.
struct SpriteEntry {
  Sprite sprite;
  Shape computed;
};

struct ScoreWeights {
  double recency = 4.0;
  double cost = 2.0;
  double size = 1.0;
  double kind = 2.0;
};

struct CacheStats {
  std::int64_t hits = 0;
  std::int64_t misses = 0;
  std::int64_t insertions = 0;
  std::int64_t evictions = 0;
  std::int64_t rejected = 0;  // larger than the whole budget
};

inline constexpr std::size_t kDefaultCacheBudget = std::size_t{64} << 20;

class RenderCache {
 public:
  explicit RenderCache(std::size_t budget = kDefaultCacheBudget, ScoreWeights w = {})
      : budget_(budget), weights_(w) {}

  /// A cache holding at most one generation per object id: storing a new
  /// generation drops the others.
  static RenderCache single_generation(std::size_t budget = kDefaultCacheBudget) {
    RenderCache c(budget);
    c.single_generation_ = true;
    return c;
  }

  RenderCache(RenderCache&& o) noexcept
      : budget_(o.budget_),
        weights_(o.weights_),
        single_generation_(o.single_generation_),
        entries_(std::move(o.entries_)),
        bytes_(o.bytes_),
        tick_(o.tick_),
        stats_(o.stats_) {}

  /// Copies an entry into `dst` unchanged. Returns false when absent.
  bool transfer_to(RenderCache& dst, const CacheKey& k) const {
    Entry e;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = entries_.find(k);
      if (it == entries_.end()) return false;
      e = it->second;
    }
    dst.put(k, e.payload, e.bytes, e.cost);
    return true;
  }

  std::shared_ptr<const Shape> get_shape(const CacheKey& k) { return get<Shape>(k); }
  std::shared_ptr<const SpriteEntry> get_sprite(const CacheKey& k) {
    return get<SpriteEntry>(k);
  }

  /// `cost` is the work (in pixel units) it took to produce the payload.
  void put_shape(const CacheKey& k, Shape s, double cost) {
    const std::size_t bytes = s.byte_size() + sizeof(Entry);
    put(k, std::make_shared<const Payload>(std::move(s)), bytes, cost);
  }
  void put_sprite(const CacheKey& k, SpriteEntry e, double cost) {
    const std::size_t bytes = e.sprite.byte_size() + e.computed.byte_size() + sizeof(Entry);
    put(k, std::make_shared<const Payload>(std::move(e)), bytes, cost);
  }

  bool contains(const CacheKey& k) const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.count(k) != 0;
  }

  /// Keys in order; for inspection and tests.
  std::vector<CacheKey> keys() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<CacheKey> out;
    for (const auto& [k, e] : entries_) out.push_back(k);
    return out;
  }

  void erase(const CacheKey& k) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(k);
    if (it == entries_.end()) return;
    bytes_ -= it->second.bytes;
    entries_.erase(it);
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.clear();
    bytes_ = 0;
  }

  std::size_t bytes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return bytes_;
  }
  std::size_t budget() const { return budget_; }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }
  CacheStats stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
  }

  /// Current eviction score of an entry; lower is evicted first.
  std::optional<double> score(const CacheKey& k) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(k);
    if (it == entries_.end()) return std::nullopt;
    return score_locked(it->second, max_cost_locked());
  }

 private:
  using Payload = std::variant<Shape, SpriteEntry>;

  struct Entry {
    std::shared_ptr<const Payload> payload;
    std::size_t bytes = 0;
    double cost = 0.0;
    std::uint64_t last_use = 0;
    CacheKind kind = CacheKind::Shape;
  };

  template <typename T>
  std::shared_ptr<const T> get(const CacheKey& k) {
    std::lock_guard<std::mutex> lock(mu_);
    ++tick_;
    auto it = entries_.find(k);
    if (it == entries_.end() || !std::holds_alternative<T>(*it->second.payload)) {
      ++stats_.misses;
      return nullptr;
    }
    ++stats_.hits;
    it->second.last_use = tick_;
    const auto& p = it->second.payload;
    return std::shared_ptr<const T>(p, &std::get<T>(*p));
  }

  void put(const CacheKey& k, std::shared_ptr<const Payload> p, std::size_t bytes,
           double cost) {
    std::lock_guard<std::mutex> lock(mu_);
    ++tick_;
    if (bytes > budget_) {
      ++stats_.rejected;
      return;
    }
    auto it = entries_.find(k);
    if (it != entries_.end()) {
      bytes_ -= it->second.bytes;
      entries_.erase(it);
    }
    if (single_generation_) {
      for (auto j = entries_.begin(); j != entries_.end();) {
        if (j->first.id == k.id && j->first.generation != k.generation) {
          bytes_ -= j->second.bytes;
          j = entries_.erase(j);
        } else {
          ++j;
        }
      }
    }
    entries_[k] = Entry{std::move(p), bytes, cost, tick_, k.kind};
    bytes_ += bytes;
    ++stats_.insertions;
    evict_locked();
  }

  double max_cost_locked() const {
    double m = 0.0;
    for (const auto& [k, x] : entries_) m = std::max(m, x.cost);
    return m;
  }

  double score_locked(const Entry& e, double max_cost) const {
    const double age = static_cast<double>(tick_ - e.last_use);
    const double recency = 1.0 / (1.0 + age);
    const double cost = max_cost > 0.0 ? e.cost / max_cost : 0.0;
    const double size = 1.0 / (1.0 + static_cast<double>(e.bytes) / 1024.0);
    const double kind = e.kind == CacheKind::Sprite ? 0.0 : 1.0;
    return weights_.recency * recency + weights_.cost * cost + weights_.size * size +
           weights_.kind * kind;
  }

  void evict_locked() {
    while (bytes_ > budget_ && !entries_.empty()) {
      auto victim = entries_.end();
      double lowest = 0.0;
      const double max_cost = max_cost_locked();
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        const double s = score_locked(it->second, max_cost);
        if (victim == entries_.end() || s < lowest) {
          victim = it;
          lowest = s;
        }
      }
      bytes_ -= victim->second.bytes;
      entries_.erase(victim);
      ++stats_.evictions;
    }
  }

  mutable std::mutex mu_;
  std::size_t budget_;
  ScoreWeights weights_;
  bool single_generation_ = false;
  std::map<CacheKey, Entry> entries_;
  std::size_t bytes_ = 0;
  std::uint64_t tick_ = 0;
  CacheStats stats_;
};

}  // namespace strata
