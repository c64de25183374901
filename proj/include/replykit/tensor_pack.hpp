#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "replykit/errors.hpp"

namespace replykit {

// Named matrices backed by one flat buffer. The flat view is what the
// optimizer, the gradient clip and finite-difference checks operate on; the
// named views are what the model math uses. Layout is fixed by declaration
// order, which also fixes the serialized tensor order.
class TensorPack {
 public:
  struct Spec {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;
  };

  void add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    specs_.push_back({name, rows, cols, total_});
    total_ += rows * cols;
    data_.setZero(total_);
  }

  Eigen::Map<Eigen::MatrixXd> mat(const std::string& name) {
    const Spec& s = find(name);
    return {data_.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> mat(const std::string& name) const {
    const Spec& s = find(name);
    return {data_.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<Eigen::VectorXd> vec(const std::string& name) {
    const Spec& s = find(name);
    return {data_.data() + s.offset, s.rows * s.cols};
  }
  Eigen::Map<const Eigen::VectorXd> vec(const std::string& name) const {
    const Spec& s = find(name);
    return {data_.data() + s.offset, s.rows * s.cols};
  }

  Eigen::VectorXd& flat() { return data_; }
  const Eigen::VectorXd& flat() const { return data_; }
  Eigen::Index size() const { return total_; }
  const std::vector<Spec>& specs() const { return specs_; }

  // Same shapes, zero values.
  TensorPack zeros_like() const {
    TensorPack out;
    out.specs_ = specs_;
    out.total_ = total_;
    out.data_.setZero(total_);
    return out;
  }

 private:
  const Spec& find(const std::string& name) const {
    for (const Spec& s : specs_) {
      if (s.name == name) return s;
    }
    throw Error(Error::Code::kBadModelFile, "unknown tensor: " + name);
  }

  std::vector<Spec> specs_;
  Eigen::Index total_ = 0;
  Eigen::VectorXd data_;
};

// AdaGrad with a global-norm clip applied before the update. Accumulators are
// non-decreasing by construction.
class AdaGrad {
 public:
  AdaGrad(Eigen::Index size, double learning_rate, double clip_value)
      : lr_(learning_rate),
        clip_(clip_value),
        accum_(Eigen::VectorXd::Zero(size)) {}

  // Clips `grad` in place and applies the update; returns the post-clip norm.
  double apply(Eigen::VectorXd& params, Eigen::VectorXd& grad) {
    double norm = grad.norm();
    if (clip_ > 0.0 && norm > clip_) {
      grad *= clip_ / norm;
      norm = clip_;
    }
    accum_.array() += grad.array().square();
    params.array() -=
        lr_ * grad.array() / (accum_.array().sqrt() + kEpsilon);
    return norm;
  }

  const Eigen::VectorXd& accumulators() const { return accum_; }

 private:
  static constexpr double kEpsilon = 1e-8;
  double lr_;
  double clip_;
  Eigen::VectorXd accum_;
};

}  // namespace replykit
