#pragma once

#include <memory>

#include "ials/aip/predictor.hpp"
#include "ials/core/simulator.hpp"
#include "ials/core/window.hpp"

namespace ials {

/// Local simulator driven by an influence predictor. Each step samples the
/// influence sources from the predictor's distribution for the current d-set
/// window, then advances the local simulator with them.
///
/// Influence draws come from the "influence" split of the reset seed; the
/// local simulator keeps its own streams.
class IalsInstance : public Simulator {
 public:
  /// `window_capacity` 0 picks the predictor's memory, or 8 for predictors
  /// that read the whole episode.
  IalsInstance(std::unique_ptr<LocalSimulator> ls, std::shared_ptr<const aip::InfluencePredictor> predictor,
               std::size_t window_capacity = 0)
      : ls_(std::move(ls)),
        predictor_(std::move(predictor)),
        window_(window_capacity != 0 ? window_capacity
                                     : static_cast<std::size_t>(predictor_->memory() > 0 ? predictor_->memory() : 8)) {
    if (!ls_ || !predictor_) throw ConfigError("ials: local simulator and predictor are required");
    predictor_->interface().require_matches(ls_->descriptor());
    session_ = predictor_->session();
  }

  const EnvDescriptor& descriptor() const override { return ls_->descriptor(); }

  Observation reset(std::uint64_t seed) override {
    Observation obs = ls_->reset(seed);
    rng_ = Rng(seed).split("influence");
    window_.clear();
    DSetRow row = ls_->dset_row();
    session_->reset(row);
    window_.push(std::move(row));
    started_ = true;
    return obs;
  }

  StepResult step(Action a) override {
    if (!started_) throw StateError("ials: step before reset");
    aip::sample_influence(session_->probabilities(), rng_, u_);
    auto r = ls_->step(a, u_);
    DSetRow row = ls_->dset_row();
    session_->push(row);
    window_.push(std::move(row));
    return r;
  }

  const DSetWindow& window() const { return window_; }
  /// Distribution the next step will sample from.
  const aip::HeadProbs& influence_distribution() { return session_->probabilities(); }
  /// Influence sampled for the most recent step.
  const InfluenceValue& last_influence() const { return u_; }
  LocalSimulator& local() { return *ls_; }
  const LocalSimulator& local() const { return *ls_; }
  const aip::InfluencePredictor& predictor() const { return *predictor_; }

 private:
  std::unique_ptr<LocalSimulator> ls_;
  std::shared_ptr<const aip::InfluencePredictor> predictor_;
  std::unique_ptr<aip::PredictorSession> session_;
  DSetWindow window_;
  Rng rng_;
  InfluenceValue u_;
  bool started_ = false;
};

}  // namespace ials
