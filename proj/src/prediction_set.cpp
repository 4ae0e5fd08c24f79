#include "urbanseg/prediction_set.hpp"

#include <cmath>
#include <string>

#include "urbanseg/errors.hpp"

namespace urbanseg {

PredictionSet::PredictionSet(std::size_t rows, std::size_t classes)
    : rows_(rows), classes_(classes), data_(rows * classes, 0.0) {}

PredictionSet::PredictionSet(std::size_t rows, std::size_t classes, std::vector<double> row_major)
    : rows_(rows), classes_(classes), data_(std::move(row_major)) {
  if (data_.size() != rows * classes) {
    fail(ErrorKind::Shape, "prediction buffer has " + std::to_string(data_.size()) +
                               " values, expected " + std::to_string(rows * classes));
  }
}

PredictionSet PredictionSet::uniform(std::size_t rows, std::size_t classes) {
  return PredictionSet(rows, classes,
                       std::vector<double>(rows * classes, 1.0 / static_cast<double>(classes)));
}

std::size_t PredictionSet::argmax_column(std::size_t i) const {
  auto r = row(i);
  std::size_t best = 0;
  for (std::size_t c = 1; c < r.size(); ++c) {
    if (r[c] > r[best]) best = c;
  }
  return best;
}

ClassId PredictionSet::argmax_class(std::size_t i) const {
  return semantic_class(static_cast<int>(argmax_column(i)));
}

double PredictionSet::confidence(std::size_t i) const { return at(i, argmax_column(i)); }

std::vector<ClassId> PredictionSet::hard_labels() const {
  std::vector<ClassId> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = argmax_class(i);
  return out;
}

void PredictionSet::validate() const {
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (double p : row(i)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        fail(ErrorKind::Validation,
             "row " + std::to_string(i) + " has probability " + std::to_string(p) + " outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      fail(ErrorKind::Validation,
           "row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", expected 1");
    }
  }
}

}  // namespace urbanseg
