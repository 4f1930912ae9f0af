#include "pcert/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "pcert/parallel.hpp"

namespace pcert {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (!(fill >= 0.0f && fill <= 1.0f)) throw InvalidArgument("fill must be in [0, 1]");
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  return epoch < cfg.epochs / 2 ? cfg.learning_rate : cfg.learning_rate / 10.0;
}

namespace {

Rng derived_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return Rng(seq);
}

struct Accumulator {
  std::vector<double> w1, b1, w2, b2;
  double loss = 0.0;
  std::size_t terms = 0;
  std::size_t scheduled = 0;
  std::size_t unique = 0;

  void add(const MlpGradients& g) {
    auto plus = [](std::vector<double>& dst, const std::vector<double>& src) {
      if (dst.empty()) dst.assign(src.size(), 0.0);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    };
    plus(w1, g.w1);
    plus(b1, g.b1);
    plus(w2, g.w2);
    plus(b2, g.b2);
    loss += g.loss;
    ++terms;
  }

  void add(const Accumulator& o) {
    auto plus = [](std::vector<double>& dst, const std::vector<double>& src) {
      if (src.empty()) return;
      if (dst.empty()) dst.assign(src.size(), 0.0);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    };
    plus(w1, o.w1);
    plus(b1, o.b1);
    plus(w2, o.w2);
    plus(b2, o.b2);
    loss += o.loss;
    terms += o.terms;
    scheduled += o.scheduled;
    unique += o.unique;
  }
};

void momentum_step(std::span<float> params, std::vector<double>& velocity,
                   const std::vector<double>& grad_sum, double scale, double lr, double momentum) {
  if (velocity.empty()) velocity.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad_sum[i] * scale;
    params[i] = static_cast<float>(static_cast<double>(params[i]) - lr * velocity[i]);
  }
}

}  // namespace

double mean_loss(const MlpModel& model, const LabeledDataset& data) {
  data.validate();
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += cross_entropy(model.predict(data.images[i]), data.labels[i]);
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(MlpModel model, const LabeledDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (data.class_count > model.class_count()) {
    throw DimensionMismatch(fmt::format("dataset has {} classes, model {}", data.class_count,
                                        model.class_count()));
  }
  for (const ImageTensor& image : data.images) {
    const InputShape got{image.height(), image.width(), image.channels()};
    if (!(got == model.shape())) throw DimensionMismatch("dataset image does not match model input");
  }
  if (data.images.front().height() != data.images.front().width()) {
    throw DimensionMismatch("mask sets require square images");
  }

  StrategyContext ctx(static_cast<int>(data.images.front().height()), cfg.patch_side, cfg.fill);
  ctx.saliency_k = cfg.saliency_k;
  ctx.random_side = cfg.random_side;
  ctx.random_count = cfg.random_count;
  if (cfg.strategy == StrategyKind::kMultisize) ctx.nesting();  // refuse early

  const MlpModel reference = model;
  std::vector<double> v_w1, v_b1, v_w2, v_b2;
  std::vector<std::size_t> order(data.size());

  TrainResult result{model, {}};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = derived_rng(cfg.seed, 0xE90C, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = lr;
    Accumulator epoch_total;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::size_t count = end - start;

      const MlpModel snapshot = cfg.frozen_reference ? reference : model;
      CachedClassifier cache(snapshot, cfg.fill);
      for (std::size_t b = 0; b < count; ++b) cache.register_image(data.images[order[start + b]]);
      const SaliencyProvider saliency = [&snapshot](const ImageTensor& img, std::size_t label) {
        return gradient_saliency(snapshot, img, label);
      };

      std::vector<Accumulator> per_image(count);
      parallel_for(count, cfg.threads, [&](std::size_t b) {
        const std::size_t sample = order[start + b];
        const std::size_t label = data.labels[sample];
        Rng rng = derived_rng(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, sample);
        StrategyOutcome outcome = run_strategy(cfg.strategy, ctx, cache, b, label, rng, saliency);
        Accumulator& acc = per_image[b];
        acc.scheduled = outcome.scheduled_evaluations;
        acc.unique = outcome.unique_evaluations;
        if (cfg.include_clean && cfg.strategy != StrategyKind::kNone) {
          acc.add(model.backward(data.images[sample], label));
        }
        for (const AugmentedCopy& copy : outcome.copies) acc.add(model.backward(copy.image, label));
      });

      Accumulator batch;
      for (const Accumulator& acc : per_image) batch.add(acc);
      const double scale = 1.0 / static_cast<double>(batch.terms);
      momentum_step(model.w1(), v_w1, batch.w1, scale, lr, cfg.momentum);
      momentum_step(model.b1(), v_b1, batch.b1, scale, lr, cfg.momentum);
      momentum_step(model.w2(), v_w2, batch.w2, scale, lr, cfg.momentum);
      momentum_step(model.b2(), v_b2, batch.b2, scale, lr, cfg.momentum);

      log.batch_scheduled.push_back(batch.scheduled);
      epoch_total.loss += batch.loss;
      epoch_total.terms += batch.terms;
      epoch_total.scheduled += batch.scheduled;
      epoch_total.unique += batch.unique;
    }

    log.mean_loss = epoch_total.loss / static_cast<double>(epoch_total.terms);
    log.loss_terms = epoch_total.terms;
    log.scheduled_evaluations = epoch_total.scheduled;
    log.unique_evaluations = epoch_total.unique;
    result.log.push_back(std::move(log));
  }
  result.model = std::move(model);
  return result;
}

}  // namespace pcert
