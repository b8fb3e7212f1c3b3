#include "rapid/metrics.hpp"

#include "rapid/error.hpp"

#include <string>

namespace rapid {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<Label> ignored)
    : classes_(classes), ignored_(classes, false), counts_(classes * classes, 0) {
  for (Label c : ignored) {
    if (c >= classes) {
      throw Error(ErrorCode::InvalidArgument,
                  "ignored class " + std::to_string(c) + " is out of range");
    }
    ignored_[c] = true;
  }
}

void ConfusionMatrix::accumulate(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::Contract, "truth has " + std::to_string(truth.size()) +
                                         " labels, prediction " +
                                         std::to_string(predicted.size()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Label t = truth[i];
    const Label p = predicted[i];
    if (t >= classes_ || p >= classes_) {
      throw Error(ErrorCode::Contract,
                  "label out of range at point " + std::to_string(i) + " (" +
                      std::to_string(t) + ", " + std::to_string(p) + ")");
    }
    if (ignored_[t]) continue;
    ++counts_[std::size_t(t) * classes_ + p];
    ++total_;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_ || other.ignored_ != ignored_) {
    throw Error(ErrorCode::Contract, "cannot merge confusion matrices of different layouts");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
  return *this;
}

std::uint64_t ConfusionMatrix::true_positives(Label c) const { return at(c, c); }

std::uint64_t ConfusionMatrix::false_positives(Label c) const {
  std::uint64_t sum = 0;
  for (Label t = 0; t < classes_; ++t) {
    if (t != c) sum += at(t, c);
  }
  return sum;
}

std::uint64_t ConfusionMatrix::false_negatives(Label c) const {
  std::uint64_t sum = 0;
  for (Label p = 0; p < classes_; ++p) {
    if (p != c) sum += at(c, p);
  }
  return sum;
}

std::optional<double> iou(const ConfusionMatrix& cm, Label c) {
  if (c >= cm.classes() || cm.ignored(c)) return std::nullopt;
  const std::uint64_t tp = cm.true_positives(c);
  const std::uint64_t denom = tp + cm.false_positives(c) + cm.false_negatives(c);
  if (denom == 0) return std::nullopt;
  return double(tp) / double(denom);
}

double miou(const ConfusionMatrix& cm, UndefinedClass policy) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (Label c = 0; c < cm.classes(); ++c) {
    if (cm.ignored(c)) continue;
    if (const auto v = iou(cm, c)) {
      sum += *v;
      ++counted;
    } else if (policy == UndefinedClass::CountAsZero) {
      ++counted;
    }
  }
  if (counted == 0) throw Error(ErrorCode::UndefinedMetric, "no class has a defined IoU");
  return sum / double(counted);
}

}  // namespace rapid
