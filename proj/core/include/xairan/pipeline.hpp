/*
 * Copyright 2026 The xairan Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xairan/errors.hpp"
#include "xairan/explain.hpp"
#include "xairan/fidelity.hpp"
#include "xairan/latency.hpp"
#include "xairan/model.hpp"
#include "xairan/trace.hpp"

namespace xairan {

using SteadyTime = std::chrono::steady_clock::time_point;

inline constexpr std::size_t kBusBacklogCapacity = 1024;

// In-process publish/subscribe bus with per-topic FIFO delivery. Messages
// published while a topic has no subscriber are held in a backlog of
// kBusBacklogCapacity (oldest dropped first) and handed to the first
// subscriber. Each subscription is a bounded queue that drops its oldest
// message on overflow.
template <typename Message>
class MessageBus {
 public:
  struct Delivery {
    Message message;
    std::uint64_t seq = 0;
    SteadyTime published;
    SteadyTime received;

    // Publish-to-receive latency in seconds, always >= 0.
    double latency() const {
      return std::max(0.0, std::chrono::duration<double>(received - published).count());
    }
  };

  class Subscription {
   public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    // Blocks until a message arrives; nullopt once the topic is closed and
    // the queue is drained.
    std::optional<Delivery> receive() {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
      return pop_locked();
    }

    std::optional<Delivery> try_receive() {
      std::lock_guard lock(mu_);
      return pop_locked();
    }

    std::size_t dropped() const {
      std::lock_guard lock(mu_);
      return dropped_;
    }

    std::size_t pending() const {
      std::lock_guard lock(mu_);
      return queue_.size();
    }

   private:
    friend class MessageBus;

    struct Pending {
      Message message;
      std::uint64_t seq;
      SteadyTime published;
    };

    void push(Pending p) {
      {
        std::lock_guard lock(mu_);
        if (queue_.size() >= capacity_) {
          queue_.pop_front();
          ++dropped_;
        }
        queue_.push_back(std::move(p));
      }
      cv_.notify_one();
    }

    void close() {
      {
        std::lock_guard lock(mu_);
        closed_ = true;
      }
      cv_.notify_all();
    }

    std::optional<Delivery> pop_locked() {
      if (queue_.empty()) return std::nullopt;
      Pending p = std::move(queue_.front());
      queue_.pop_front();
      return Delivery{std::move(p.message), p.seq, p.published, std::chrono::steady_clock::now()};
    }

    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Pending> queue_;
    std::size_t dropped_ = 0;
    bool closed_ = false;
  };

  void register_topic(const std::string& topic) {
    std::lock_guard lock(mu_);
    topics_.try_emplace(topic);
  }

  // Throws ConfigError for an unregistered topic.
  void publish(const std::string& topic, Message message) {
    std::lock_guard lock(mu_);
    Topic& t = find_locked(topic);
    typename Subscription::Pending p{std::move(message), t.next_seq++,
                                     std::chrono::steady_clock::now()};
    if (t.subscribers.empty()) {
      if (t.backlog.size() >= kBusBacklogCapacity) {
        t.backlog.pop_front();
        ++t.backlog_dropped;
      }
      t.backlog.push_back(std::move(p));
      return;
    }
    for (std::size_t s = 0; s + 1 < t.subscribers.size(); ++s) t.subscribers[s]->push(p);
    t.subscribers.back()->push(std::move(p));
  }

  std::shared_ptr<Subscription> subscribe(const std::string& topic,
                                          std::size_t capacity = kBusBacklogCapacity) {
    if (capacity == 0) throw ConfigError("subscription capacity must be >= 1");
    std::lock_guard lock(mu_);
    Topic& t = find_locked(topic);
    auto sub = std::make_shared<Subscription>(capacity);
    if (t.closed) sub->close();
    if (t.subscribers.empty()) {
      while (!t.backlog.empty()) {
        sub->push(std::move(t.backlog.front()));
        t.backlog.pop_front();
      }
    }
    t.subscribers.push_back(sub);
    return sub;
  }

  // Wakes blocked receivers; they drain what is queued and then see nullopt.
  void close(const std::string& topic) {
    std::lock_guard lock(mu_);
    Topic& t = find_locked(topic);
    t.closed = true;
    for (auto& s : t.subscribers) s->close();
  }

  std::size_t backlog_dropped(const std::string& topic) {
    std::lock_guard lock(mu_);
    return find_locked(topic).backlog_dropped;
  }

 private:
  struct Topic {
    std::vector<std::shared_ptr<Subscription>> subscribers;
    std::deque<typename Subscription::Pending> backlog;
    std::size_t backlog_dropped = 0;
    std::uint64_t next_seq = 0;
    bool closed = false;
  };

  Topic& find_locked(const std::string& topic) {
    const auto it = topics_.find(topic);
    if (it == topics_.end()) throw ConfigError("unknown topic '" + topic + "'");
    return it->second;
  }

  std::mutex mu_;
  std::map<std::string, Topic> topics_;
};

// Bounded window store keyed by window id; inserting past capacity evicts
// the oldest entry. One writer, many readers.
class SharedDataLayer {
 public:
  explicit SharedDataLayer(std::size_t capacity = 256);

  void put(std::uint64_t id, KpmWindow window);
  std::optional<KpmWindow> get(std::uint64_t id) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  const std::size_t capacity_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::uint64_t, KpmWindow> windows_;
  std::deque<std::uint64_t> order_;
};

struct InferenceEvent {
  std::size_t cycle = 0;
  std::uint64_t window_id = 0;
  double prediction = 0.0;
  SteadyTime inf_begin;
  SteadyTime inf_end;
  // The predictor's forward pass; attention and hybrid reuse it.
  std::shared_ptr<const ForwardCache> cache;
};

struct ExplanationEvent {
  std::size_t cycle = 0;
  std::uint64_t window_id = 0;
  double prediction = 0.0;
  std::optional<Attribution> attribution;
  std::optional<FidelityReport> fidelity;
  LatencyRecord latency;
};

struct PipelineOptions {
  ExplainerConfig explainer;
  Budget budget;
  bool online_fidelity = false;
  NeighborhoodConfig neighborhood;
  // Runs both stages on the calling thread, one cycle at a time.
  bool single_threaded = false;
  std::size_t queue_capacity = 64;
  std::size_t sdl_capacity = 256;
  // Minimum spacing between predictor cycles in threaded mode.
  std::chrono::nanoseconds cycle_interval{0};
};

struct PipelineLog {
  Method method = Method::kNone;
  std::size_t cycles = 0;
  std::vector<ExplanationEvent> explanations;
  std::size_t dropped = 0;
  std::size_t budget_violations = 0;
};

inline constexpr const char* kInferenceTopic = "tp/inference";
inline constexpr const char* kExplanationTopic = "xai/explanation";

// Predictor stage publishes one InferenceEvent per window; the explainer
// stage fetches the window from the shared data layer, explains it and
// publishes an ExplanationEvent; a logger collects those. Attribution content
// depends only on (seed, cycle). Throws IntegrityError if a published window
// id cannot be resolved.
PipelineLog run_pipeline(std::span<const WindowTarget> windows, const ModelParams& params,
                         const Normalizer& norm, const PipelineOptions& options);

}  // namespace xairan
