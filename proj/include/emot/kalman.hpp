#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>

#include "emot/error.hpp"
#include "emot/geometry.hpp"

namespace emot {

/// Constant-velocity state (cx, cy, aspect, h) and per-frame velocities of each.
template <typename Scalar>
struct BoxState {
  using Vector = Eigen::Matrix<Scalar, 8, 1>;
  using Matrix = Eigen::Matrix<Scalar, 8, 8>;

  Vector mean = Vector::Zero();
  Matrix covariance = Matrix::Identity();

  friend bool operator==(const BoxState& a, const BoxState& b) {
    return a.mean == b.mean && a.covariance == b.covariance;
  }
};

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> to_measurement(const Box<Scalar>& b) {
  return {b.cx(), b.cy(), b.h > Scalar(0) ? b.w / b.h : Scalar(0), b.h};
}

/// Box of the state's position part, w = aspect * h. Non-positive heights give a zero box.
template <typename Scalar>
Box<Scalar> predicted_box(const BoxState<Scalar>& s) {
  const Scalar h = s.mean(3);
  if (!(h > Scalar(0))) return {s.mean(0), s.mean(1), Scalar(0), Scalar(0)};
  const Scalar w = s.mean(2) * h;
  return box_from_center(s.mean(0), s.mean(1), w, h);
}

/// Noise weights relative to the box height.
template <typename Scalar>
struct KalmanNoise {
  Scalar std_weight_position = Scalar(1) / Scalar(20);
  Scalar std_weight_velocity = Scalar(1) / Scalar(160);
};

template <typename Scalar = double>
class BoxKalmanFilter {
 public:
  using State = BoxState<Scalar>;
  using Vector = typename State::Vector;
  using Matrix = typename State::Matrix;
  using Measurement = Eigen::Matrix<Scalar, 4, 1>;

  explicit BoxKalmanFilter(KalmanNoise<Scalar> noise = {}) : noise_(noise) {
    motion_ = Matrix::Identity();
    motion_.template topRightCorner<4, 4>() = Eigen::Matrix<Scalar, 4, 4>::Identity();
    observe_.setZero();
    observe_.template leftCols<4>() = Eigen::Matrix<Scalar, 4, 4>::Identity();
  }

  const KalmanNoise<Scalar>& noise() const { return noise_; }

  State initiate(const Box<Scalar>& box) const {
    if (!box.valid() || !(box.h > Scalar(0))) throw Error("cannot initiate a track from a zero-height box");
    State s;
    s.mean.setZero();
    s.mean.template head<4>() = to_measurement(box);
    const Scalar h = box.h;
    const Scalar p = noise_.std_weight_position, v = noise_.std_weight_velocity;
    Vector stds;
    stds << 2 * p * h, 2 * p * h, Scalar(1e-2), 2 * p * h, 10 * v * h, 10 * v * h, Scalar(1e-5), 10 * v * h;
    s.covariance = stds.array().square().matrix().asDiagonal();
    return s;
  }
  State initiate(const Detection& d) const { return initiate(d.bbox.template cast<Scalar>()); }

  State predict(const State& s) const {
    const Scalar h = s.mean(3);
    const Scalar p = noise_.std_weight_position * h, v = noise_.std_weight_velocity * h;
    Vector stds;
    stds << p, p, Scalar(1e-2), p, v, v, Scalar(1e-5), v;
    State out;
    out.mean = motion_ * s.mean;
    out.covariance = motion_ * s.covariance * motion_.transpose();
    out.covariance.diagonal() += stds.array().square().matrix();
    symmetrize(out.covariance);
    return out;
  }

  State update(const State& s, const Measurement& z) const {
    if (!z.allFinite()) throw Error("non-finite measurement");
    const Scalar h = s.mean(3);
    const Scalar p = noise_.std_weight_position * h;
    Measurement r;
    r << p, p, Scalar(1e-1), p;

    const Eigen::Matrix<Scalar, 4, 1> projected = observe_ * s.mean;
    Eigen::Matrix<Scalar, 4, 4> innovation_cov = observe_ * s.covariance * observe_.transpose();
    innovation_cov.diagonal() += r.array().square().matrix();

    Eigen::LLT<Eigen::Matrix<Scalar, 4, 4>> chol(innovation_cov);
    if (chol.info() != Eigen::Success) throw FilterDivergence("innovation covariance is not positive definite");
    // K = P H^T S^-1, solved as S K^T = H P.
    const Eigen::Matrix<Scalar, 8, 4> gain = chol.solve(observe_ * s.covariance).transpose();

    State out;
    out.mean = s.mean + gain * (z - projected);
    out.covariance = s.covariance - gain * innovation_cov * gain.transpose();
    symmetrize(out.covariance);
    return out;
  }
  State update(const State& s, const Box<Scalar>& box) const { return update(s, to_measurement(box)); }
  State update(const State& s, const Detection& d) const {
    return update(s, d.bbox.template cast<Scalar>());
  }

 private:
  static void symmetrize(Matrix& m) { m = (Scalar(0.5) * (m + m.transpose())).eval(); }

  KalmanNoise<Scalar> noise_;
  Matrix motion_;
  Eigen::Matrix<Scalar, 4, 8> observe_;
};

}  // namespace emot
