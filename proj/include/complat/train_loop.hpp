#pragma once

#include <cstdint>
#include <limits>

#include "complat/errors.hpp"

namespace complat {

// Shared trainer knobs. Defaults follow the common protocol: Adam lr 1e-3,
// batch 2048, weight decay 1e-4, evaluation every 5 epochs with patience 5,
// InfoNCE temperature 0.15.
struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 2048;
  double weight_decay = 1e-4;
  std::size_t eval_every = 5;  // epochs between validation evaluations
  std::size_t patience = 5;    // evaluations without improvement before stopping
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 42;
  double tau = 0.15;        // InfoNCE temperature
  std::size_t n_neg = 256;  // semantic global negatives per anchor
  std::size_t hard_pool = 512;  // fusion mining candidate pool per batch
  std::size_t hard_m = 16;      // fusion mined negatives per anchor
  std::size_t eval_k = 20;      // validation Recall@K

  void validate() const {
    if (lr <= 0 || batch_size < 1 || weight_decay < 0 || eval_every < 1 || patience < 1 ||
        max_epochs < 1 || tau <= 0 || eval_k < 1)
      throw ConfigError("invalid training configuration");
  }
};

// Stops after `patience` consecutive evaluations without strict improvement
// and remembers the argmax evaluation index.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw ConfigError("patience must be >= 1");
  }

  // Returns true when training should stop after this evaluation.
  bool update(double metric) {
    if (metric > best_) {
      best_ = metric;
      best_index_ = count_;
      since_best_ = 0;
    } else {
      ++since_best_;
    }
    ++count_;
    return since_best_ >= patience_;
  }

  bool improved_last() const { return since_best_ == 0; }
  std::size_t best_index() const { return best_index_; }
  double best_value() const { return best_; }
  std::size_t count() const { return count_; }

 private:
  std::size_t patience_;
  std::size_t count_ = 0;
  std::size_t best_index_ = 0;
  std::size_t since_best_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct TrainInfo {
  double best_val = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::size_t evaluations = 0;
};

}  // namespace complat
