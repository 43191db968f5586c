#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/aip/dataset.hpp"
#include "ials/core/simulator.hpp"
#include "ials/nn/checkpoint.hpp"
#include "ials/nn/dense.hpp"
#include "ials/nn/gru.hpp"
#include "ials/nn/heads.hpp"

namespace ials::aip {

using nn::Matrix;
using nn::Vector;
using HeadProbs = std::vector<Vector>;

enum class Variant { trained_ff, trained_gru, untrained, fixed_marginal, exact_oracle };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::trained_ff: return "trained-ff";
    case Variant::trained_gru: return "trained-gru";
    case Variant::untrained: return "untrained";
    case Variant::fixed_marginal: return "fixed-marginal";
    case Variant::exact_oracle: return "exact-oracle";
  }
  return "untrained";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "trained-ff") return Variant::trained_ff;
  if (s == "trained-gru") return Variant::trained_gru;
  if (s == "untrained") return Variant::untrained;
  if (s == "fixed-marginal") return Variant::fixed_marginal;
  if (s == "exact-oracle") return Variant::exact_oracle;
  throw ConfigError("unknown predictor variant '" + s + "'");
}

/// What a predictor was built for. Checked against the simulator it drives.
struct PredictorInterface {
  std::string env_id;
  int dset_width = 0;
  std::vector<int> classes;

  static PredictorInterface of(const EnvDescriptor& d) { return {d.env_id, d.dset_width, d.influence_classes}; }
  std::uint64_t fingerprint() const {
    EnvDescriptor d;
    d.env_id = env_id;
    d.dset_width = dset_width;
    d.influence_classes = classes;
    return d.predictor_fingerprint();
  }
  void require_matches(const EnvDescriptor& d) const {
    if (fingerprint() != d.predictor_fingerprint()) {
      throw ConfigError("predictor was built for '" + env_id + "' (d-set width " + std::to_string(dset_width) +
                        ") and does not match environment '" + d.env_id + "'");
    }
  }
};

/// Per-episode predictor state. reset() with the first d-set row, then
/// probabilities() before every step and push() with each new row.
class PredictorSession {
 public:
  virtual ~PredictorSession() = default;
  virtual void reset(const DSetRow& first) = 0;
  virtual void push(const DSetRow& row) = 0;
  virtual const HeadProbs& probabilities() = 0;
};

class InfluencePredictor {
 public:
  virtual ~InfluencePredictor() = default;
  virtual Variant variant() const = 0;
  virtual const PredictorInterface& interface() const = 0;
  /// Number of rows the predictor looks at; 0 means the whole episode.
  virtual int memory() const = 0;
  virtual std::unique_ptr<PredictorSession> session() const = 0;
  virtual json to_json() const = 0;

  /// Pure function of the frozen predictor and the window (oldest row first).
  /// Windowed predictors use the last memory() rows; whole-episode predictors
  /// treat the window as the episode so far.
  virtual HeadProbs predict(std::span<const DSetRow> window) const {
    if (window.empty()) throw ShapeError("predict: empty window");
    auto s = session();
    s->reset(window.front());
    for (std::size_t i = 1; i < window.size(); ++i) s->push(window[i]);
    return s->probabilities();
  }

  /// Mean summed-over-heads cross-entropy over every step of the episodes.
  virtual double mean_cross_entropy(const std::vector<EpisodeSequence>& episodes) const {
    auto s = session();
    double total = 0.0;
    long count = 0;
    for (const auto& e : episodes) {
      for (std::size_t t = 0; t < e.targets.size(); ++t) {
        if (t == 0) {
          s->reset(e.rows[0]);
        } else {
          s->push(e.rows[t]);
        }
        total += nn::cross_entropy(s->probabilities(), e.targets[t]);
        ++count;
      }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
  }

 protected:
  void check_row(const DSetRow& r) const {
    if (static_cast<int>(r.size()) != interface().dset_width) {
      throw ShapeError("predictor: d-set row width " + std::to_string(r.size()) + ", expected " +
                       std::to_string(interface().dset_width));
    }
  }
};

/// Draws each head independently from its categorical.
inline void sample_influence(const HeadProbs& probs, Rng& rng, InfluenceValue& out) {
  out.classes.resize(probs.size());
  for (std::size_t m = 0; m < probs.size(); ++m) {
    const auto& p = probs[m];
    const double u = rng.uniform();
    double acc = 0.0;
    int c = static_cast<int>(p.size()) - 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      acc += p(i);
      if (u < acc) {
        c = static_cast<int>(i);
        break;
      }
    }
    out.classes[m] = c;
  }
}

inline InfluenceValue sample_influence(const HeadProbs& probs, Rng& rng) {
  InfluenceValue u;
  sample_influence(probs, rng, u);
  return u;
}

inline double evaluate_ce(const InfluencePredictor& p, const InfluenceDataset& d) {
  if (d.provenance.dset_width != p.interface().dset_width || d.provenance.influence_classes != p.interface().classes) {
    throw ShapeError("evaluate_ce: dataset does not match the predictor");
  }
  return p.mean_cross_entropy(d.episodes());
}

// ---------------------------------------------------------------------------
// Fixed marginal

class FixedMarginalPredictor : public InfluencePredictor {
 public:
  FixedMarginalPredictor(PredictorInterface iface, const std::vector<std::vector<double>>& marginals)
      : iface_(std::move(iface)) {
    if (marginals.size() != iface_.classes.size()) throw ShapeError("fixed marginal: head count mismatch");
    for (std::size_t m = 0; m < marginals.size(); ++m) {
      if (static_cast<int>(marginals[m].size()) != iface_.classes[m]) throw ShapeError("fixed marginal: class count mismatch");
      double s = 0.0;
      for (double v : marginals[m]) {
        if (!(v >= 0.0)) throw ConfigError("fixed marginal: negative probability");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) throw ConfigError("fixed marginal: head " + std::to_string(m) + " does not sum to 1");
      probs_.push_back(Eigen::Map<const Vector>(marginals[m].data(), static_cast<Eigen::Index>(marginals[m].size())));
    }
  }

  static FixedMarginalPredictor from_dataset(const InfluenceDataset& d) {
    return {{d.provenance.env_id, d.provenance.dset_width, d.provenance.influence_classes}, d.head_marginals()};
  }

  Variant variant() const override { return Variant::fixed_marginal; }
  const PredictorInterface& interface() const override { return iface_; }
  int memory() const override { return 1; }
  const HeadProbs& marginals() const { return probs_; }

  std::unique_ptr<PredictorSession> session() const override { return std::make_unique<Session>(this); }

  json to_json() const override {
    json m = json::array();
    for (const auto& p : probs_) m.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    return {{"marginals", m}};
  }

 private:
  struct Session : PredictorSession {
    explicit Session(const FixedMarginalPredictor* o) : owner(o) {}
    void reset(const DSetRow& r) override { owner->check_row(r); }
    void push(const DSetRow& r) override { owner->check_row(r); }
    const HeadProbs& probabilities() override { return owner->probs_; }
    const FixedMarginalPredictor* owner;
  };

  PredictorInterface iface_;
  HeadProbs probs_;
};

// ---------------------------------------------------------------------------
// Neural predictors

enum class Arch { ff, gru };
enum class RecurrentMode { stream, window };

struct NetConfig {
  Arch arch = Arch::gru;
  RecurrentMode mode = RecurrentMode::stream;  // gru only
  int k = 8;                                   // window rows for ff and windowed gru
  int gru_hidden = 32;
  std::vector<int> ff_hidden{64, 64};

  /// Rows the network consumes per prediction; 0 = whole episode.
  int memory() const { return arch == Arch::gru && mode == RecurrentMode::stream ? 0 : k; }

  void validate() const {
    if (k < 1) throw ConfigError("predictor: k must be >= 1");
    if (arch == Arch::gru && gru_hidden < 1) throw ConfigError("predictor: gru_hidden must be >= 1");
    if (arch == Arch::ff && ff_hidden.empty()) throw ConfigError("predictor: ff_hidden must not be empty");
  }
};

inline void to_json(json& j, const NetConfig& c) {
  j = {{"arch", c.arch == Arch::ff ? "ff" : "gru"},
       {"mode", c.mode == RecurrentMode::stream ? "stream" : "window"},
       {"k", c.k},
       {"gru_hidden", c.gru_hidden},
       {"ff_hidden", c.ff_hidden}};
}

inline void from_json(const json& j, NetConfig& c) {
  const NetConfig d;
  const auto arch = j.value("arch", std::string("gru"));
  if (arch != "ff" && arch != "gru") throw ConfigError("predictor: unknown arch '" + arch + "'");
  c.arch = arch == "ff" ? Arch::ff : Arch::gru;
  const auto mode = j.value("mode", std::string("stream"));
  if (mode != "stream" && mode != "window") throw ConfigError("predictor: unknown gru mode '" + mode + "'");
  c.mode = mode == "stream" ? RecurrentMode::stream : RecurrentMode::window;
  c.k = j.value("k", d.k);
  c.gru_hidden = j.value("gru_hidden", d.gru_hidden);
  c.ff_hidden = j.value("ff_hidden", d.ff_hidden);
  c.validate();
}

/// Shared-trunk multi-head network: an MLP over the flattened window or a GRU
/// over the rows, followed by one softmax head per influence source.
class InfluenceNet {
 public:
  InfluenceNet(NetConfig cfg, int dset_width, std::vector<int> classes)
      : cfg_(std::move(cfg)), width_(dset_width), classes_(std::move(classes)) {
    cfg_.validate();
    if (width_ < 1) throw ConfigError("predictor: d-set width must be >= 1");
    if (cfg_.arch == Arch::ff) {
      std::vector<int> hidden(cfg_.ff_hidden.begin(), cfg_.ff_hidden.end() - 1);
      trunk_ = nn::Mlp("aip.trunk", cfg_.k * width_, hidden, cfg_.ff_hidden.back(), nn::Activation::tanh,
                       nn::Activation::tanh);
      heads_ = nn::MultiHeadSoftmax("aip.head", cfg_.ff_hidden.back(), classes_);
    } else {
      cell_ = nn::GruCell("aip.gru", width_, cfg_.gru_hidden);
      heads_ = nn::MultiHeadSoftmax("aip.head", cfg_.gru_hidden, classes_);
    }
  }

  void init(Rng& rng) {
    if (cfg_.arch == Arch::ff) {
      trunk_.init(rng);
    } else {
      cell_.init(rng);
    }
    heads_.init(rng);
  }

  const NetConfig& config() const { return cfg_; }
  int width() const { return width_; }
  const std::vector<int>& classes() const { return classes_; }
  int features() const { return cfg_.arch == Arch::ff ? cfg_.ff_hidden.back() : cfg_.gru_hidden; }

  nn::ParameterList parameters() {
    nn::ParameterList ps = cfg_.arch == Arch::ff ? trunk_.parameters() : cell_.parameters();
    for (auto* p : heads_.parameters()) ps.push_back(p);
    return ps;
  }

  nn::Mlp& trunk() { return trunk_; }
  const nn::Mlp& trunk() const { return trunk_; }
  nn::GruCell& cell() { return cell_; }
  const nn::GruCell& cell() const { return cell_; }
  nn::MultiHeadSoftmax& heads() { return heads_; }
  const nn::MultiHeadSoftmax& heads() const { return heads_; }

 private:
  NetConfig cfg_;
  int width_;
  std::vector<int> classes_;
  nn::Mlp trunk_;
  nn::GruCell cell_;
  nn::MultiHeadSoftmax heads_;
};

namespace detail {

/// Allocation-free single-sample GRU step for binary inputs.
struct GruScratch {
  Vector az, ar, an, rh, out;
};

inline void gru_step_bits(const nn::GruCell& c, const Bits* x, const Vector& h, GruScratch& s) {
  s.az = c.b_z.value.col(0);
  s.ar = c.b_r.value.col(0);
  s.an = c.b_n.value.col(0);
  if (x != nullptr) {
    for (std::size_t i = 0; i < x->size(); ++i) {
      if (!(*x)[i]) continue;
      const auto col = static_cast<Eigen::Index>(i);
      s.az += c.w_z.value.col(col);
      s.ar += c.w_r.value.col(col);
      s.an += c.w_n.value.col(col);
    }
  }
  s.az.noalias() += c.u_z.value * h;
  s.ar.noalias() += c.u_r.value * h;
  s.az = (1.0 / (1.0 + (-s.az.array()).exp())).matrix();
  s.ar = (1.0 / (1.0 + (-s.ar.array()).exp())).matrix();
  s.rh = s.ar.cwiseProduct(h);
  s.an.noalias() += c.u_n.value * s.rh;
  s.an = s.an.array().tanh().matrix();
  s.out = ((1.0 - s.az.array()) * s.an.array() + s.az.array() * h.array()).matrix();
}

inline void heads_into(const nn::MultiHeadSoftmax& heads, const Vector& features, HeadProbs& out) {
  const auto& hs = heads.heads();
  out.resize(hs.size());
  for (std::size_t m = 0; m < hs.size(); ++m) {
    auto& p = out[m];
    p = hs[m].bias.value.col(0);
    p.noalias() += hs[m].weight.value * features;
    const double mx = p.maxCoeff();
    p = (p.array() - mx).exp().matrix();
    p /= p.sum();
  }
}

}  // namespace detail

class NetPredictor : public InfluencePredictor {
 public:
  NetPredictor(Variant v, PredictorInterface iface, InfluenceNet net)
      : variant_(v), iface_(std::move(iface)), net_(std::move(net)) {
    if (v != Variant::trained_ff && v != Variant::trained_gru && v != Variant::untrained) {
      throw ConfigError("net predictor: variant must be trained-ff, trained-gru or untrained");
    }
    if (net_.width() != iface_.dset_width || net_.classes() != iface_.classes) {
      throw ShapeError("net predictor: network shape does not match the interface");
    }
  }

  /// A freshly initialized network.
  static NetPredictor untrained(const PredictorInterface& iface, const NetConfig& cfg, std::uint64_t seed) {
    InfluenceNet net(cfg, iface.dset_width, iface.classes);
    Rng rng(seed);
    net.init(rng);
    return {Variant::untrained, iface, std::move(net)};
  }

  Variant variant() const override { return variant_; }
  const PredictorInterface& interface() const override { return iface_; }
  int memory() const override { return net_.config().memory(); }
  const InfluenceNet& net() const { return net_; }
  InfluenceNet& net() { return net_; }

  std::unique_ptr<PredictorSession> session() const override { return std::make_unique<Session>(this); }

  json to_json() const override {
    auto& self = const_cast<InfluenceNet&>(net_);
    return {{"net", net_.config()}, {"parameters", nn::parameters_to_json(self.parameters())}};
  }

  double mean_cross_entropy(const std::vector<EpisodeSequence>& episodes) const override;

 private:
  class Session : public PredictorSession {
   public:
    explicit Session(const NetPredictor* o) : owner_(o), rows_(static_cast<std::size_t>(o->net_.config().k)) {
      if (o->net_.config().arch == Arch::gru) h_ = Vector::Zero(o->net_.config().gru_hidden);
    }

    void reset(const DSetRow& first) override {
      owner_->check_row(first);
      rows_.clear();
      dirty_ = true;
      if (streaming()) h_.setZero();
      push_row(first);
    }

    void push(const DSetRow& row) override {
      owner_->check_row(row);
      push_row(row);
    }

    const HeadProbs& probabilities() override {
      if (!dirty_) return probs_;
      const auto& net = owner_->net_;
      if (net.config().arch == Arch::ff) {
        const int k = net.config().k, w = net.width();
        Matrix x = Matrix::Zero(k * w, 1);
        const int pad = k - static_cast<int>(rows_.size());
        for (std::size_t r = 0; r < rows_.size(); ++r) {
          for (int i = 0; i < w; ++i) x((pad + static_cast<int>(r)) * w + i, 0) = rows_[r][static_cast<std::size_t>(i)];
        }
        feat_ = net.trunk().forward(x).col(0);
        detail::heads_into(net.heads(), feat_, probs_);
      } else if (streaming()) {
        detail::heads_into(net.heads(), h_, probs_);
      } else {
        h_.setZero();
        const int pad = net.config().k - static_cast<int>(rows_.size());
        for (int i = 0; i < pad; ++i) advance(nullptr);
        for (const auto& r : rows_.rows()) advance(&r.bits);
        detail::heads_into(net.heads(), h_, probs_);
      }
      dirty_ = false;
      return probs_;
    }

   private:
    bool streaming() const { return owner_->net_.config().memory() == 0; }

    void push_row(const DSetRow& row) {
      dirty_ = true;
      if (streaming()) {
        advance(&row.bits);
      } else {
        rows_.push(row);
      }
    }

    void advance(const Bits* x) {
      detail::gru_step_bits(owner_->net_.cell(), x, h_, scratch_);
      h_.swap(scratch_.out);
    }

    const NetPredictor* owner_;
    DSetWindow rows_;
    Vector h_, feat_;
    detail::GruScratch scratch_;
    HeadProbs probs_;
    bool dirty_ = true;
  };

  Variant variant_;
  PredictorInterface iface_;
  InfluenceNet net_;
};

// ---------------------------------------------------------------------------
// Batched forward passes shared by training and evaluation

namespace detail {

/// Rows t-k+1..t of an episode as a (k*w x 1) column, left-padded with zeros.
inline void fill_window_column(const EpisodeSequence& e, int t, int k, int w, Matrix& x, Eigen::Index col) {
  for (int r = 0; r < k; ++r) {
    const int src = t - (k - 1) + r;
    for (int i = 0; i < w; ++i) {
      x(r * w + i, col) = src >= 0 ? e.rows[static_cast<std::size_t>(src)][static_cast<std::size_t>(i)] : 0.0;
    }
  }
}

/// Row `src` of each (episode, t) pair as a w x B matrix; rows before the
/// start of the episode are zero.
struct StepRef {
  const EpisodeSequence* episode;
  int t;
};

inline Matrix row_batch(const std::vector<StepRef>& refs, int offset, int w) {
  Matrix x = Matrix::Zero(w, static_cast<Eigen::Index>(refs.size()));
  for (std::size_t j = 0; j < refs.size(); ++j) {
    const int src = refs[j].t + offset;
    if (src < 0) continue;
    const auto& row = refs[j].episode->rows[static_cast<std::size_t>(src)];
    for (int i = 0; i < w; ++i) x(i, static_cast<Eigen::Index>(j)) = row[static_cast<std::size_t>(i)];
  }
  return x;
}

inline std::vector<std::vector<int>> target_batch(const std::vector<StepRef>& refs, std::size_t heads) {
  std::vector<std::vector<int>> tg(heads, std::vector<int>(refs.size()));
  for (std::size_t j = 0; j < refs.size(); ++j) {
    const auto& u = refs[j].episode->targets[static_cast<std::size_t>(refs[j].t)];
    for (std::size_t m = 0; m < heads; ++m) tg[m][j] = u[m];
  }
  return tg;
}

/// Windowed forward (ff or windowed gru) for a batch of steps.
inline std::vector<Matrix> window_forward(const InfluenceNet& net, const std::vector<StepRef>& refs,
                                          std::vector<nn::DenseCache>* trunk_caches,
                                          std::vector<nn::GruStepCache>* gru_caches,
                                          std::vector<nn::DenseCache>* head_caches, Matrix* features_out = nullptr) {
  const int k = net.config().k, w = net.width();
  Matrix feat;
  if (net.config().arch == Arch::ff) {
    Matrix x(k * w, static_cast<Eigen::Index>(refs.size()));
    for (std::size_t j = 0; j < refs.size(); ++j) fill_window_column(*refs[j].episode, refs[j].t, k, w, x, static_cast<Eigen::Index>(j));
    feat = trunk_caches != nullptr ? net.trunk().forward(x, *trunk_caches) : net.trunk().forward(x);
  } else {
    Matrix h = Matrix::Zero(net.config().gru_hidden, static_cast<Eigen::Index>(refs.size()));
    if (gru_caches != nullptr) gru_caches->resize(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) {
      const Matrix x = row_batch(refs, r - (k - 1), w);
      h = gru_caches != nullptr ? net.cell().step(x, h, (*gru_caches)[static_cast<std::size_t>(r)]) : net.cell().step(x, h);
    }
    feat = std::move(h);
  }
  if (features_out != nullptr) *features_out = feat;
  return head_caches != nullptr ? net.heads().forward(feat, *head_caches) : net.heads().forward(feat);
}

/// Summed-over-heads CE of each column, with masking.
inline double masked_cross_entropy(const std::vector<Matrix>& probs, const std::vector<std::vector<int>>& targets,
                                   const std::vector<std::uint8_t>& valid, double scale,
                                   std::vector<Matrix>* dlogits) {
  double loss = 0.0;
  if (dlogits != nullptr) dlogits->resize(probs.size());
  for (std::size_t m = 0; m < probs.size(); ++m) {
    if (dlogits != nullptr) (*dlogits)[m] = Matrix::Zero(probs[m].rows(), probs[m].cols());
    for (Eigen::Index j = 0; j < probs[m].cols(); ++j) {
      if (!valid[static_cast<std::size_t>(j)]) continue;
      const int c = targets[m][static_cast<std::size_t>(j)];
      loss -= std::log(std::max(probs[m](c, j), nn::kProbabilityFloor));
      if (dlogits != nullptr) {
        (*dlogits)[m].col(j) = probs[m].col(j) * scale;
        (*dlogits)[m](c, j) -= scale;
      }
    }
  }
  return loss;
}

}  // namespace detail

inline double NetPredictor::mean_cross_entropy(const std::vector<EpisodeSequence>& episodes) const {
  const std::size_t heads = iface_.classes.size();
  double total = 0.0;
  long count = 0;
  if (memory() != 0) {
    std::vector<detail::StepRef> refs;
    auto flush = [&] {
      if (refs.empty()) return;
      const auto probs = detail::window_forward(net_, refs, nullptr, nullptr, nullptr);
      const std::vector<std::uint8_t> valid(refs.size(), 1);
      total += detail::masked_cross_entropy(probs, detail::target_batch(refs, heads), valid, 0.0, nullptr);
      count += static_cast<long>(refs.size());
      refs.clear();
    };
    for (const auto& e : episodes) {
      for (int t = 0; t < static_cast<int>(e.targets.size()); ++t) {
        refs.push_back({&e, t});
        if (refs.size() == 1024) flush();
      }
    }
    flush();
  } else {
    const std::size_t batch = 256;
    for (std::size_t start = 0; start < episodes.size(); start += batch) {
      const std::size_t end = std::min(episodes.size(), start + batch);
      std::size_t longest = 0;
      for (std::size_t e = start; e < end; ++e) longest = std::max(longest, episodes[e].targets.size());
      Matrix h = Matrix::Zero(net_.config().gru_hidden, static_cast<Eigen::Index>(end - start));
      for (std::size_t t = 0; t < longest; ++t) {
        Matrix x = Matrix::Zero(net_.width(), h.cols());
        std::vector<std::uint8_t> valid(end - start, 0);
        std::vector<std::vector<int>> tg(heads, std::vector<int>(end - start, 0));
        for (std::size_t e = start; e < end; ++e) {
          const auto& ep = episodes[e];
          if (t >= ep.targets.size()) continue;
          const auto j = e - start;
          valid[j] = 1;
          for (int i = 0; i < net_.width(); ++i) x(i, static_cast<Eigen::Index>(j)) = ep.rows[t][static_cast<std::size_t>(i)];
          for (std::size_t m = 0; m < heads; ++m) tg[m][j] = ep.targets[t][m];
          ++count;
        }
        h = net_.cell().step(x, h);
        total += detail::masked_cross_entropy(net_.heads().forward(h), tg, valid, 0.0, nullptr);
      }
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr const char* kPredictorFormat = "ials-predictor";

inline json predictor_checkpoint(const InfluencePredictor& p) {
  const auto& i = p.interface();
  return {{"format", kPredictorFormat},
          {"version", nn::kCheckpointFormatVersion},
          {"variant", to_string(p.variant())},
          {"env_id", i.env_id},
          {"dset_width", i.dset_width},
          {"influence_classes", i.classes},
          {"fingerprint", i.fingerprint()},
          {"body", p.to_json()}};
}

/// Reads the common header and returns the interface; callers build the body.
inline PredictorInterface checkpoint_interface(const json& j) {
  if (j.value("format", std::string()) != kPredictorFormat) throw IoError("not a predictor checkpoint");
  if (j.value("version", 0) != nn::kCheckpointFormatVersion) throw IoError("unsupported predictor checkpoint version");
  PredictorInterface i{j.at("env_id").get<std::string>(), j.at("dset_width").get<int>(),
                       j.at("influence_classes").get<std::vector<int>>()};
  if (j.at("fingerprint").get<std::uint64_t>() != i.fingerprint()) throw IoError("predictor checkpoint fingerprint mismatch");
  return i;
}

/// Neural and fixed-marginal variants. The exact oracle is rebuilt from its
/// toy instance (see exact_predictor.hpp).
inline std::unique_ptr<InfluencePredictor> predictor_from_json(const json& j) {
  try {
    const auto iface = checkpoint_interface(j);
    const auto v = variant_from_string(j.at("variant").get<std::string>());
    const auto& body = j.at("body");
    if (v == Variant::fixed_marginal) {
      return std::make_unique<FixedMarginalPredictor>(iface, body.at("marginals").get<std::vector<std::vector<double>>>());
    }
    if (v == Variant::exact_oracle) throw IoError("exact-oracle checkpoints must be loaded with the toy instance");
    InfluenceNet net(body.at("net").get<NetConfig>(), iface.dset_width, iface.classes);
    nn::parameters_from_json(body.at("parameters"), net.parameters());
    return std::make_unique<NetPredictor>(v, iface, std::move(net));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed predictor checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid predictor checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw IoError(std::string("invalid predictor checkpoint: ") + e.what());
  }
}

inline void save_predictor(const InfluencePredictor& p, const std::string& path) {
  nn::write_json_file(path, predictor_checkpoint(p));
}

inline std::unique_ptr<InfluencePredictor> load_predictor(const std::string& path) {
  try {
    return predictor_from_json(nn::read_json_file(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace ials::aip
