#pragma once

#include "rapid/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rapid {

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes, std::vector<Label> ignored = {});

  /// Points whose truth label is ignored are skipped entirely. Throws Contract
  /// on length mismatch or an out-of-range label.
  void accumulate(std::span<const Label> truth, std::span<const Label> predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::size_t classes() const noexcept { return classes_; }
  bool ignored(Label c) const { return c < classes_ && ignored_[c]; }
  std::uint64_t at(Label truth, Label predicted) const {
    return counts_[std::size_t(truth) * classes_ + predicted];
  }
  std::uint64_t total() const noexcept { return total_; }

  std::uint64_t true_positives(Label c) const;
  std::uint64_t false_positives(Label c) const;
  std::uint64_t false_negatives(Label c) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<bool> ignored_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// TP / (TP + FP + FN); no value when the denominator is zero or the class
/// is ignored.
std::optional<double> iou(const ConfusionMatrix& cm, Label c);

enum class UndefinedClass { Exclude, CountAsZero };

/// Mean of the defined per-class IoUs. Throws UndefinedMetric when no class
/// is defined.
double miou(const ConfusionMatrix& cm, UndefinedClass policy = UndefinedClass::Exclude);

}  // namespace rapid
