#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "ials/aip/exact_predictor.hpp"
#include "ials/aip/train.hpp"
#include "ials/cli/envs.hpp"

namespace ials::aip {

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"max_epochs", c.max_epochs}, {"batch", c.batch},       {"chunk", c.chunk},
       {"lr", c.lr},                 {"clip_norm", c.clip_norm}, {"patience", c.patience},
       {"val_every", c.val_every},   {"max_seconds", c.max_seconds}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.batch = j.value("batch", d.batch);
  c.chunk = j.value("chunk", d.chunk);
  c.lr = j.value("lr", d.lr);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.patience = j.value("patience", d.patience);
  c.val_every = j.value("val_every", d.val_every);
  c.max_seconds = j.value("max_seconds", d.max_seconds);
}

}  // namespace ials::aip

namespace ials::cli {

/// Network config for a variant: the architecture follows the variant name,
/// the rest comes from `overrides`.
inline aip::NetConfig net_for_variant(aip::Variant v, const json& overrides) {
  json base = aip::NetConfig{};
  if (v == aip::Variant::trained_ff) base["arch"] = "ff";
  if (overrides.is_object()) {
    if (v == aip::Variant::trained_ff && overrides.value("arch", std::string("ff")) != "ff") {
      throw ConfigError("variant trained-ff needs arch ff");
    }
    if (v == aip::Variant::trained_gru && overrides.value("arch", std::string("gru")) != "gru") {
      throw ConfigError("variant trained-gru needs arch gru");
    }
    base.update(overrides);
  }
  return parse_config<aip::NetConfig>(base, "predictor net");
}

inline bool variant_needs_data(aip::Variant v) {
  return v == aip::Variant::trained_ff || v == aip::Variant::trained_gru || v == aip::Variant::fixed_marginal;
}

struct BuiltPredictor {
  std::shared_ptr<const aip::InfluencePredictor> predictor;
  double train_seconds = 0.0;
  json report = json::object();
};

/// Builds one predictor variant. `data` may be null for variants that need
/// none; the exact oracle needs the toy environment.
inline BuiltPredictor build_predictor(aip::Variant v, const aip::NetConfig& net, const aip::TrainConfig& tc,
                                      const aip::InfluenceDataset* data, const Environment* env, std::uint64_t seed) {
  BuiltPredictor out;
  if (variant_needs_data(v) && data == nullptr) throw ConfigError("variant " + aip::to_string(v) + " needs a dataset");
  switch (v) {
    case aip::Variant::trained_ff:
    case aip::Variant::trained_gru: {
      aip::TrainConfig c = tc;
      c.seed = seed;
      auto [p, rep] = aip::train_predictor(*data, net, c);
      out.train_seconds = rep.seconds;
      out.report = rep.to_json();
      out.predictor = std::make_shared<aip::NetPredictor>(std::move(p));
      break;
    }
    case aip::Variant::untrained: {
      const auto iface = data != nullptr ? aip::PredictorInterface{data->provenance.env_id, data->provenance.dset_width,
                                                                   data->provenance.influence_classes}
                                         : aip::PredictorInterface::of(env->descriptor());
      out.predictor = std::make_shared<aip::NetPredictor>(aip::NetPredictor::untrained(iface, net, seed));
      break;
    }
    case aip::Variant::fixed_marginal:
      out.predictor = std::make_shared<aip::FixedMarginalPredictor>(aip::FixedMarginalPredictor::from_dataset(*data));
      break;
    case aip::Variant::exact_oracle:
      if (env == nullptr || !env->toy()) throw ConfigError("the exact-oracle variant is only available on toy-dbn");
      out.predictor = std::make_shared<aip::ExactOraclePredictor>(env->toy());
      break;
  }
  return out;
}

}  // namespace ials::cli
