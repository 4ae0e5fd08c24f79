#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

/// Per-point probability rows. Semantic predictions have six columns in
/// canonical order Soil..Water; other column counts (e.g. the two-column
/// ground mask) are allowed for exchange purposes.
class PredictionSet {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  PredictionSet() = default;
  PredictionSet(std::size_t rows, std::size_t classes);
  /// Takes a row-major rows x classes buffer.
  PredictionSet(std::size_t rows, std::size_t classes, std::vector<double> row_major);

  /// Every row 1/classes.
  static PredictionSet uniform(std::size_t rows, std::size_t classes = kNumSemanticClasses);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t classes() const noexcept { return classes_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * classes_, classes_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * classes_, classes_}; }
  double at(std::size_t i, std::size_t c) const { return data_[i * classes_ + c]; }
  double& at(std::size_t i, std::size_t c) { return data_[i * classes_ + c]; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Column of the maximum probability; lowest column wins ties.
  std::size_t argmax_column(std::size_t i) const;
  /// argmax as ClassId (six-column sets only).
  ClassId argmax_class(std::size_t i) const;
  /// Maximum probability of row i.
  double confidence(std::size_t i) const;

  std::vector<ClassId> hard_labels() const;

  /// Throws Validation for entries outside [0,1] or rows not summing to 1.
  void validate() const;

 private:
  std::size_t rows_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> data_;
};

}  // namespace urbanseg
