#pragma once

#include <algorithm>
#include <memory>

#include "ials/aip/predictor.hpp"
#include "ials/exact/inference.hpp"
#include "ials/exact/toy_sim.hpp"

namespace ials::aip {

/// Exact I(u_t | l_t) on a toy instance by forward filtering. Needs a d-set
/// that carries the previous action and every local cell, so the full
/// action-local-state history can be read back from the rows.
class ExactOraclePredictor : public InfluencePredictor {
 public:
  explicit ExactOraclePredictor(std::shared_ptr<const exact::ToyDbn> dbn)
      : dbn_(std::move(dbn)), iface_(PredictorInterface::of(exact::toy_descriptor(*dbn_))) {
    const auto& d = *dbn_;
    if (!d.dset_actions) throw ConfigError("exact oracle: the d-set must include the previous action");
    const int offset = d.num_actions;
    for (int c : d.local_cells) {
      const auto it = std::find(d.dset_cells.begin(), d.dset_cells.end(), c);
      if (it == d.dset_cells.end()) throw ConfigError("exact oracle: the d-set must include every local cell");
      position_.push_back(offset + static_cast<int>(it - d.dset_cells.begin()));
    }
  }

  Variant variant() const override { return Variant::exact_oracle; }
  const PredictorInterface& interface() const override { return iface_; }
  int memory() const override { return 0; }
  const exact::ToyDbn& dbn() const { return *dbn_; }

  std::unique_ptr<PredictorSession> session() const override { return std::make_unique<Session>(this); }
  json to_json() const override { return {{"toy", dbn_->to_json()}}; }

  static std::unique_ptr<ExactOraclePredictor> from_checkpoint(const json& j) {
    auto d = std::make_shared<exact::ToyDbn>(exact::ToyDbn::from_json(j.at("body").at("toy")));
    auto p = std::make_unique<ExactOraclePredictor>(std::move(d));
    if (checkpoint_interface(j).fingerprint() != p->interface().fingerprint()) {
      throw IoError("exact-oracle checkpoint does not match its toy instance");
    }
    return p;
  }

 private:
  class Session : public PredictorSession {
   public:
    explicit Session(const ExactOraclePredictor* o) : owner_(o) { probs_.assign(1, Vector::Zero(2)); }

    void reset(const DSetRow& first) override {
      owner_->check_row(first);
      belief_ = exact::initial_joint(owner_->dbn(), decode_x(first));
      if (!(exact::normalize(belief_) > 0.0)) throw ZeroLikelihoodError("exact oracle: impossible initial state");
      update();
    }

    void push(const DSetRow& row) override {
      owner_->check_row(row);
      int a = -1;
      for (int i = 0; i < owner_->dbn().num_actions; ++i) {
        if (row[static_cast<std::size_t>(i)]) a = i;
      }
      if (a < 0) throw ShapeError("exact oracle: row carries no action");
      belief_ = exact::propagate_joint(owner_->dbn(), belief_, a, decode_x(row));
      if (!(exact::normalize(belief_) > 0.0)) throw ZeroLikelihoodError("exact oracle: history has zero likelihood");
      update();
    }

    const HeadProbs& probabilities() override { return probs_; }

   private:
    int decode_x(const DSetRow& row) const {
      int x = 0;
      for (std::size_t j = 0; j < owner_->position_.size(); ++j) {
        x |= static_cast<int>(row[static_cast<std::size_t>(owner_->position_[j])]) << j;
      }
      return x;
    }

    void update() {
      const auto u = exact::influence_of_belief(owner_->dbn(), belief_);
      probs_[0](0) = u[0];
      probs_[0](1) = u[1];
    }

    const ExactOraclePredictor* owner_;
    exact::Belief belief_;
    HeadProbs probs_;
  };

  std::shared_ptr<const exact::ToyDbn> dbn_;
  PredictorInterface iface_;
  std::vector<int> position_;
};

/// Any predictor checkpoint, including the exact oracle.
inline std::unique_ptr<InfluencePredictor> load_any_predictor(const std::string& path) {
  try {
    const auto j = nn::read_json_file(path);
    if (j.value("variant", std::string()) == "exact-oracle") {
      try {
        return ExactOraclePredictor::from_checkpoint(j);
      } catch (const json::exception& e) {
        throw IoError(std::string("malformed exact-oracle checkpoint: ") + e.what());
      }
    }
    return predictor_from_json(j);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace ials::aip
