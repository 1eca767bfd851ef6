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

#include "xairan/pipeline.hpp"

#include <thread>

namespace xairan {

SharedDataLayer::SharedDataLayer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("shared data layer capacity must be >= 1");
}

void SharedDataLayer::put(std::uint64_t id, KpmWindow window) {
  std::unique_lock lock(mu_);
  auto [it, inserted] = windows_.insert_or_assign(id, std::move(window));
  if (!inserted) return;
  order_.push_back(id);
  while (windows_.size() > capacity_) {
    windows_.erase(order_.front());
    order_.pop_front();
  }
}

std::optional<KpmWindow> SharedDataLayer::get(std::uint64_t id) const {
  std::shared_lock lock(mu_);
  const auto it = windows_.find(id);
  if (it == windows_.end()) return std::nullopt;
  return it->second;
}

std::size_t SharedDataLayer::size() const {
  std::shared_lock lock(mu_);
  return windows_.size();
}

namespace {

using Clock = std::chrono::steady_clock;
using InferenceBus = MessageBus<InferenceEvent>;
using ExplanationBus = MessageBus<ExplanationEvent>;

class Predictor {
 public:
  Predictor(const ModelParams& params, const Normalizer& norm, SharedDataLayer& sdl,
            InferenceBus& bus)
      : params_(params), norm_(norm), sdl_(sdl), bus_(bus) {}

  void step(std::size_t cycle, const KpmWindow& window) {
    InferenceEvent ev;
    ev.cycle = cycle;
    ev.window_id = cycle;
    ev.inf_begin = Clock::now();
    auto cache = std::make_shared<ForwardCache>(forward(params_, window, norm_));
    ev.inf_end = Clock::now();
    ev.prediction = cache->prediction;
    ev.cache = std::move(cache);
    sdl_.put(ev.window_id, window);
    bus_.publish(kInferenceTopic, std::move(ev));
  }

 private:
  const ModelParams& params_;
  const Normalizer& norm_;
  SharedDataLayer& sdl_;
  InferenceBus& bus_;
};

class Explainer {
 public:
  Explainer(const ModelParams& params, const Normalizer& norm, const SharedDataLayer& sdl,
            const PipelineOptions& options, ExplanationBus& out)
      : params_(params), norm_(norm), sdl_(sdl), options_(options), out_(out) {}

  void handle(InferenceBus::Delivery delivery) {
    const InferenceEvent& ev = delivery.message;
    const auto window = sdl_.get(ev.window_id);
    if (!window) {
      throw IntegrityError("window id " + std::to_string(ev.window_id) +
                           " missing from the shared data layer");
    }
    const ExplainerConfig& cfg = options_.explainer;
    const std::uint64_t seed = cfg.seed ^ static_cast<std::uint64_t>(ev.cycle);

    ExplanationEvent out;
    out.cycle = ev.cycle;
    out.window_id = ev.window_id;
    out.prediction = ev.prediction;

    StageTimings timings;
    timings.inf_begin = ev.inf_begin;
    timings.inf_end = ev.inf_end;
    timings.publish = delivery.published;
    timings.receive = delivery.received;
    timings.xai_begin = Clock::now();
    if (cfg.method != Method::kNone) {
      ExplainInput in{norm_.normalize(*window), cfg.baseline.resolve(norm_, window->size()),
                      cfg.baseline.id()};
      switch (cfg.method) {
        case Method::kAttention:
          out.attribution = explain_attention(*ev.cache);
          break;
        case Method::kHybrid:
          out.attribution =
              explain_hybrid(params_, norm_, *ev.cache, in.baseline, in.baseline_id, cfg.k);
          break;
        case Method::kIg:
          out.attribution = explain_ig(params_, norm_, in, cfg.k);
          break;
        case Method::kShap:
          out.attribution = explain_shap(params_, norm_, in, cfg.m, seed);
          break;
        case Method::kNone:
          break;
      }
      timings.xai_end = Clock::now();
      if (options_.online_fidelity) {
        NeighborhoodConfig nb = options_.neighborhood;
        nb.seed = options_.neighborhood.seed ^ static_cast<std::uint64_t>(ev.cycle);
        out.fidelity = evaluate_fidelity(params_, norm_, in, *out.attribution, nb, ev.cycle);
      }
    } else {
      timings.xai_end = timings.xai_begin;
    }

    const int k_or_m = cfg.method == Method::kShap ? cfg.m
                       : (cfg.method == Method::kIg || cfg.method == Method::kHybrid) ? cfg.k
                                                                                       : 0;
    out.latency = measure_cycle(timings, cfg.method, k_or_m, ev.cycle, options_.budget);
    out_.publish(kExplanationTopic, std::move(out));
  }

 private:
  const ModelParams& params_;
  const Normalizer& norm_;
  const SharedDataLayer& sdl_;
  const PipelineOptions& options_;
  ExplanationBus& out_;
};

void log_event(PipelineLog& log, ExplanationBus::Delivery delivery) {
  if (!delivery.message.latency.within_budget) ++log.budget_violations;
  log.explanations.push_back(std::move(delivery.message));
}

}  // namespace

PipelineLog run_pipeline(std::span<const WindowTarget> windows, const ModelParams& params,
                         const Normalizer& norm, const PipelineOptions& options) {
  options.budget.validate();
  params.validate();
  if (windows.empty()) throw SizeError("run_pipeline: no windows");

  SharedDataLayer sdl(options.sdl_capacity);
  InferenceBus inference_bus;
  ExplanationBus explanation_bus;
  inference_bus.register_topic(kInferenceTopic);
  explanation_bus.register_topic(kExplanationTopic);
  auto inference_sub = inference_bus.subscribe(kInferenceTopic, options.queue_capacity);
  auto explanation_sub =
      explanation_bus.subscribe(kExplanationTopic, std::numeric_limits<std::size_t>::max());

  Predictor predictor(params, norm, sdl, inference_bus);
  Explainer explainer(params, norm, sdl, options, explanation_bus);

  PipelineLog log;
  log.method = options.explainer.method;
  log.cycles = windows.size();

  if (options.single_threaded) {
    for (std::size_t cycle = 0; cycle < windows.size(); ++cycle) {
      predictor.step(cycle, windows[cycle].window);
      while (auto d = inference_sub->try_receive()) explainer.handle(std::move(*d));
      while (auto d = explanation_sub->try_receive()) log_event(log, std::move(*d));
    }
  } else {
    std::exception_ptr failure;
    std::mutex failure_mu;
    const auto record_failure = [&] {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    };

    std::thread producer([&] {
      try {
        auto next = Clock::now();
        for (std::size_t cycle = 0; cycle < windows.size(); ++cycle) {
          if (options.cycle_interval.count() > 0) {
            std::this_thread::sleep_until(next);
            next += options.cycle_interval;
          }
          predictor.step(cycle, windows[cycle].window);
        }
      } catch (...) {
        record_failure();
      }
      inference_bus.close(kInferenceTopic);
    });
    std::thread consumer([&] {
      try {
        while (auto d = inference_sub->receive()) explainer.handle(std::move(*d));
      } catch (...) {
        record_failure();
        // Drain so the producer never blocks on a dead consumer.
        while (inference_sub->receive()) {
        }
      }
      explanation_bus.close(kExplanationTopic);
    });
    while (auto d = explanation_sub->receive()) log_event(log, std::move(*d));
    producer.join();
    consumer.join();
    if (failure) std::rethrow_exception(failure);
  }

  log.dropped = inference_sub->dropped();
  return log;
}

}  // namespace xairan
