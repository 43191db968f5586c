#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ials/aip/predictor.hpp"
#include "ials/nn/adam.hpp"

namespace ials::aip {

struct TrainConfig {
  int max_epochs = 100;
  int batch = 64;           // samples (windowed) or episodes (streaming gru)
  int chunk = 16;           // truncated BPTT length for the streaming gru
  double lr = 1e-3;
  double clip_norm = 5.0;
  int patience = 5;         // epochs without validation improvement
  int val_every = 10;       // every 10th episode is held out
  double max_seconds = 0.0; // 0 = no time limit
  std::uint64_t seed = 0;
  std::function<void(int epoch, double train_ce, double val_ce)> on_epoch;
};

struct EpochStat {
  int epoch = 0;
  double train_ce = 0.0;
  double val_ce = 0.0;
};

struct TrainReport {
  std::vector<EpochStat> epochs;
  double initial_train_ce = 0.0;
  double final_train_ce = 0.0;
  double best_val_ce = 0.0;
  int best_epoch = 0;
  bool early_stopped = false;
  double seconds = 0.0;
  long train_samples = 0;
  long val_samples = 0;

  json to_json() const {
    json e = json::array();
    for (const auto& s : epochs) e.push_back({{"epoch", s.epoch}, {"train_ce", s.train_ce}, {"val_ce", s.val_ce}});
    return {{"epochs", e},
            {"initial_train_ce", initial_train_ce},
            {"final_train_ce", final_train_ce},
            {"best_val_ce", best_val_ce},
            {"best_epoch", best_epoch},
            {"early_stopped", early_stopped},
            {"seconds", seconds},
            {"train_samples", train_samples},
            {"val_samples", val_samples}};
  }
};

/// Training cross-entropy rose by more than 10% for 5 epochs in a row.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, TrainReport r) : NumericError(what), report(std::move(r)) {}
  TrainReport report;
};

namespace detail {

inline void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
}

inline long count_steps(const std::vector<EpisodeSequence>& eps) {
  long n = 0;
  for (const auto& e : eps) n += static_cast<long>(e.targets.size());
  return n;
}

/// One epoch over windowed examples. Returns the summed loss.
inline double windowed_epoch(InfluenceNet& net, nn::Adam& opt, const std::vector<EpisodeSequence>& eps,
                             const TrainConfig& cfg, Rng& rng) {
  std::vector<StepRef> all;
  for (const auto& e : eps) {
    for (int t = 0; t < static_cast<int>(e.targets.size()); ++t) all.push_back({&e, t});
  }
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  const auto params = net.parameters();
  const std::size_t heads = net.classes().size();
  double total = 0.0;
  std::vector<StepRef> refs;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
    refs.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch)); ++i) refs.push_back(all[order[i]]);
    std::vector<nn::DenseCache> tc, hc;
    std::vector<nn::GruStepCache> gc;
    const auto probs = window_forward(net, refs, &tc, &gc, &hc);
    std::vector<Matrix> dlogits;
    const std::vector<std::uint8_t> valid(refs.size(), 1);
    total += masked_cross_entropy(probs, target_batch(refs, heads), valid, 1.0 / static_cast<double>(refs.size()), &dlogits);
    opt.zero_grad();
    Matrix g = net.heads().backward(dlogits, hc);
    if (net.config().arch == Arch::ff) {
      net.trunk().backward(g, tc);
    } else {
      nn::gru_backward_through_time(net.cell(), g, gc);
    }
    nn::clip_grad_norm(params, cfg.clip_norm);
    opt.step();
  }
  return total;
}

/// One epoch of truncated BPTT over whole episodes.
inline double streaming_epoch(InfluenceNet& net, nn::Adam& opt, const std::vector<EpisodeSequence>& eps,
                              const TrainConfig& cfg, Rng& rng) {
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  const auto params = net.parameters();
  const std::size_t heads = net.classes().size();
  const int w = net.width();
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
    const auto cols = static_cast<Eigen::Index>(end - start);
    std::size_t longest = 0;
    for (std::size_t i = start; i < end; ++i) longest = std::max(longest, eps[order[i]].targets.size());
    Matrix h = Matrix::Zero(net.config().gru_hidden, cols);
    for (std::size_t c0 = 0; c0 < longest; c0 += static_cast<std::size_t>(cfg.chunk)) {
      const std::size_t c1 = std::min(longest, c0 + static_cast<std::size_t>(cfg.chunk));
      const std::size_t len = c1 - c0;
      std::vector<nn::GruStepCache> gc(len);
      std::vector<std::vector<nn::DenseCache>> hc(len);
      std::vector<std::vector<Matrix>> probs(len);
      std::vector<std::vector<std::vector<int>>> tg(len, std::vector<std::vector<int>>(heads, std::vector<int>(end - start, 0)));
      std::vector<std::vector<std::uint8_t>> valid(len, std::vector<std::uint8_t>(end - start, 0));
      long n_valid = 0;
      for (std::size_t s = 0; s < len; ++s) {
        const std::size_t t = c0 + s;
        Matrix x = Matrix::Zero(w, cols);
        for (std::size_t i = start; i < end; ++i) {
          const auto& e = eps[order[i]];
          if (t >= e.targets.size()) continue;
          const auto j = i - start;
          valid[s][j] = 1;
          ++n_valid;
          for (int b = 0; b < w; ++b) x(b, static_cast<Eigen::Index>(j)) = e.rows[t][static_cast<std::size_t>(b)];
          for (std::size_t m = 0; m < heads; ++m) tg[s][m][j] = e.targets[t][m];
        }
        h = net.cell().step(x, h, gc[s]);
        probs[s] = net.heads().forward(h, hc[s]);
      }
      if (n_valid == 0) continue;
      opt.zero_grad();
      const double scale = 1.0 / static_cast<double>(n_valid);
      Matrix dh = Matrix::Zero(h.rows(), h.cols());
      for (std::size_t s = len; s-- > 0;) {
        std::vector<Matrix> dlogits;
        total += masked_cross_entropy(probs[s], tg[s], valid[s], scale, &dlogits);
        dh += net.heads().backward(dlogits, hc[s]);
        Matrix dprev;
        net.cell().backward(dh, gc[s], dprev);
        dh = std::move(dprev);
      }
      nn::clip_grad_norm(params, cfg.clip_norm);
      opt.step();
    }
  }
  return total;
}

}  // namespace detail

/// Fits an already initialized network to a dataset by minimizing the mean
/// cross-entropy. Holds out every `val_every`-th episode, stops early on the
/// validation loss and returns the best parameters seen.
inline std::pair<NetPredictor, TrainReport> fit_predictor(const InfluenceDataset& data, InfluenceNet net,
                                                          const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("train: empty dataset");
  if (cfg.batch < 1 || cfg.chunk < 1 || cfg.max_epochs < 0 || cfg.val_every < 2) throw ConfigError("train: invalid config");
  const auto t0 = std::chrono::steady_clock::now();
  const auto all = data.episodes();
  std::vector<EpisodeSequence> train, val;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (static_cast<int>(i % static_cast<std::size_t>(cfg.val_every)) == cfg.val_every - 1 ? val : train).push_back(all[i]);
  }
  if (train.empty()) train = val;
  if (val.empty()) val = train;

  const PredictorInterface iface{data.provenance.env_id, data.provenance.dset_width, data.provenance.influence_classes};
  if (net.width() != iface.dset_width || net.classes() != iface.classes) {
    throw ShapeError("train: network does not match the dataset");
  }
  const Variant v = net.config().arch == Arch::ff ? Variant::trained_ff : Variant::trained_gru;
  Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
  NetPredictor pred(v, iface, std::move(net));
  auto& model = pred.net();
  nn::Adam opt(model.parameters(), nn::AdamConfig{cfg.lr});

  TrainReport rep;
  rep.train_samples = detail::count_steps(train);
  rep.val_samples = detail::count_steps(val);
  rep.initial_train_ce = pred.mean_cross_entropy(train);
  rep.best_val_ce = pred.mean_cross_entropy(val);
  std::vector<Matrix> best;
  for (auto* p : model.parameters()) best.push_back(p->value);

  int since_best = 0, rising = 0;
  double prev_train = rep.initial_train_ce;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double sum = model.config().memory() == 0 ? detail::streaming_epoch(model, opt, train, cfg, shuffle_rng)
                                                    : detail::windowed_epoch(model, opt, train, cfg, shuffle_rng);
    const double train_ce = sum / static_cast<double>(rep.train_samples);
    const double val_ce = pred.mean_cross_entropy(val);
    rep.epochs.push_back({epoch, train_ce, val_ce});
    if (cfg.on_epoch) cfg.on_epoch(epoch, train_ce, val_ce);

    rising = train_ce > 1.1 * prev_train ? rising + 1 : 0;
    prev_train = train_ce;
    if (rising >= 5) {
      rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      throw DivergenceError("train: cross-entropy rose by more than 10% for 5 consecutive epochs", rep);
    }
    if (val_ce < rep.best_val_ce) {
      rep.best_val_ce = val_ce;
      rep.best_epoch = epoch;
      since_best = 0;
      const auto ps = model.parameters();
      for (std::size_t i = 0; i < ps.size(); ++i) best[i] = ps[i]->value;
    } else if (++since_best >= cfg.patience) {
      rep.early_stopped = true;
      break;
    }
    if (cfg.max_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > cfg.max_seconds) {
      break;
    }
  }
  const auto ps = model.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = best[i];
  rep.final_train_ce = pred.mean_cross_entropy(train);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(pred), rep};
}

/// Initializes a network from the "init" split of `cfg.seed` and fits it.
inline std::pair<NetPredictor, TrainReport> train_predictor(const InfluenceDataset& data, const NetConfig& net_cfg,
                                                            const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("train: empty dataset");
  InfluenceNet net(net_cfg, data.provenance.dset_width, data.provenance.influence_classes);
  Rng init_rng = Rng(cfg.seed).split("init");
  net.init(init_rng);
  return fit_predictor(data, std::move(net), cfg);
}

}  // namespace ials::aip
