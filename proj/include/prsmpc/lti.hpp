#pragma once

#include <utility>

#include <Eigen/Dense>

#include "prsmpc/errors.hpp"
#include "prsmpc/gaussians.hpp"

namespace prsmpc::lti {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Discrete-time model x(k+1) = A x(k) + B u(k) + affine + w(k).
struct LtiModel {
    MatrixXd A;
    MatrixXd B;
    VectorXd affine;

    LtiModel(MatrixXd A, MatrixXd B);
    LtiModel(MatrixXd A, MatrixXd B, VectorXd affine);

    int state_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }
};

double spectral_radius(const MatrixXd& m);

// Error-feedback gain K with cached closed-loop matrix A + B K.
// Construction rejects gains that do not contract the error dynamics.
struct ClosedLoopGain {
    MatrixXd K;
    MatrixXd A_K;

    ClosedLoopGain(const LtiModel& model, MatrixXd K);
};

// Stacked linear maps from initial error and disturbance sequence to the
// error trajectory [e(1); ...; e(T)]:
//   e = A0 e(0) + Abar [w(0); ...; w(T-1)]
// A0 block i is A_K^(i+1); Abar block (i, j) is A_K^(i-j) for i >= j.
struct PredictionStack {
    MatrixXd A0;
    MatrixXd Abar;
    int block = 1;
    int horizon = 0;
};

// Solve A_K X A_K' - X + Q = 0 for symmetric PSD X by vectorization; the
// state dimensions here are small enough that the dense n^2 x n^2 solve is
// preferable to iterative schemes.
MatrixXd dlyap(const MatrixXd& A_K, const MatrixXd& Q);

PredictionStack prediction_stack(const MatrixXd& A_K, int horizon);

// Mean and covariance of the stacked error trajectory for initial error e0
// under the given disturbance law (uses the first `horizon` blocks of it).
std::pair<VectorXd, MatrixXd> sequence_moments(const PredictionStack& stack,
                                               const VectorXd& e0,
                                               const gaussians::GaussianSequence& dist);

// Extract the moments of the step-th block (1-based) of a stacked law.
std::pair<VectorXd, MatrixXd> marginal(const VectorXd& mean, const MatrixXd& cov,
                                       int step, int block);

// Infinite-horizon LQR gain via Riccati fixed-point iteration; returns K such
// that u = K x makes A + B K stable.
MatrixXd lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                  const MatrixXd& R);

} // namespace prsmpc::lti
