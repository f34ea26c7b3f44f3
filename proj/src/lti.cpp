#include "prsmpc/lti.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace prsmpc::lti {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw DimensionMismatch(what);
}

} // namespace

LtiModel::LtiModel(MatrixXd A_, MatrixXd B_)
    : LtiModel(std::move(A_), std::move(B_), VectorXd()) {}

LtiModel::LtiModel(MatrixXd A_, MatrixXd B_, VectorXd affine_)
    : A(std::move(A_)), B(std::move(B_)), affine(std::move(affine_)) {
    require(A.rows() == A.cols(), "LtiModel: A must be square");
    require(A.rows() >= 1 && B.cols() >= 1, "LtiModel: empty state or input");
    require(B.rows() == A.rows(), "LtiModel: B row count must match A");
    if (affine.size() == 0) {
        affine = VectorXd::Zero(A.rows());
    }
    require(affine.size() == A.rows(), "LtiModel: affine offset size mismatch");
}

double spectral_radius(const MatrixXd& m) {
    // Complex conjugate dominant pairs defeat plain power iteration, so use
    // the dense QR eigensolver; n is small everywhere in this library.
    Eigen::EigenSolver<MatrixXd> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

ClosedLoopGain::ClosedLoopGain(const LtiModel& model, MatrixXd K_) : K(std::move(K_)) {
    require(K.rows() == model.input_dim() && K.cols() == model.state_dim(),
            "ClosedLoopGain: K must be n_u x n_x");
    A_K = model.A + model.B * K;
    const double rho = spectral_radius(A_K);
    if (rho >= 1.0 - 1e-9) {
        throw NotStable("ClosedLoopGain: spectral radius of A+BK is " +
                        std::to_string(rho));
    }
}

MatrixXd dlyap(const MatrixXd& A_K, const MatrixXd& Q) {
    require(A_K.rows() == A_K.cols(), "dlyap: A_K must be square");
    require(Q.rows() == Q.cols() && Q.rows() == A_K.rows(),
            "dlyap: Q must match A_K");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + Q.cwiseAbs().maxCoeff())) {
        throw DimensionMismatch("dlyap: Q must be symmetric");
    }
    const double rho = spectral_radius(A_K);
    if (rho >= 1.0 - 1e-9) {
        throw NotStable("dlyap: spectral radius " + std::to_string(rho));
    }

    const int n = static_cast<int>(A_K.rows());
    // Column-major vec identity vec(A X A') = (A (x) A) vec(X) turns the
    // fixed point into the linear system (I - A_K (x) A_K) vec(X) = vec(Q).
    MatrixXd lhs = MatrixXd::Identity(n * n, n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            lhs.block(i * n, j * n, n, n) -= A_K(i, j) * A_K;
        }
    }
    VectorXd q(n * n);
    for (int c = 0; c < n; ++c) q.segment(c * n, n) = Q.col(c);
    const VectorXd xv = lhs.partialPivLu().solve(q);
    MatrixXd X(n, n);
    for (int c = 0; c < n; ++c) X.col(c) = xv.segment(c * n, n);
    X = 0.5 * (X + X.transpose().eval());
    return X;
}

PredictionStack prediction_stack(const MatrixXd& A_K, int horizon) {
    require(A_K.rows() == A_K.cols(), "prediction_stack: A_K must be square");
    if (horizon < 1) throw DimensionMismatch("prediction_stack: horizon must be >= 1");
    const int n = static_cast<int>(A_K.rows());

    PredictionStack stack;
    stack.block = n;
    stack.horizon = horizon;
    stack.A0 = MatrixXd::Zero(horizon * n, n);
    stack.Abar = MatrixXd::Zero(horizon * n, horizon * n);

    MatrixXd power = MatrixXd::Identity(n, n); // A_K^0
    std::vector<MatrixXd> powers(horizon + 1);
    powers[0] = power;
    for (int i = 1; i <= horizon; ++i) {
        power = A_K * power;
        powers[i] = power;
    }
    for (int i = 0; i < horizon; ++i) {
        stack.A0.block(i * n, 0, n, n) = powers[i + 1];
        for (int j = 0; j <= i; ++j) {
            stack.Abar.block(i * n, j * n, n, n) = powers[i - j];
        }
    }
    return stack;
}

std::pair<VectorXd, MatrixXd> sequence_moments(const PredictionStack& stack,
                                               const VectorXd& e0,
                                               const gaussians::GaussianSequence& dist) {
    const int n = stack.block;
    const int T = stack.horizon;
    require(e0.size() == n, "sequence_moments: e0 size mismatch");
    require(dist.block == n, "sequence_moments: disturbance block size mismatch");
    require(dist.steps() >= T, "sequence_moments: disturbance sequence too short");

    const VectorXd mu = dist.mean.head(T * n);
    const MatrixXd sigma = dist.cov.topLeftCorner(T * n, T * n);

    VectorXd mean = stack.A0 * e0 + stack.Abar * mu;
    MatrixXd cov = stack.Abar * sigma * stack.Abar.transpose();
    cov = 0.5 * (cov + cov.transpose().eval());
    return {std::move(mean), std::move(cov)};
}

std::pair<VectorXd, MatrixXd> marginal(const VectorXd& mean, const MatrixXd& cov,
                                       int step, int block) {
    const int steps = static_cast<int>(mean.size()) / block;
    if (step < 1 || step > steps) {
        throw IndexOutOfRange("marginal: step " + std::to_string(step) +
                              " outside 1.." + std::to_string(steps));
    }
    require(cov.rows() == mean.size() && cov.cols() == mean.size(),
            "marginal: covariance size mismatch");
    const int off = (step - 1) * block;
    return {mean.segment(off, block), cov.block(off, off, block, block)};
}

MatrixXd lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                  const MatrixXd& R) {
    require(A.rows() == A.cols() && B.rows() == A.rows(), "lqr_gain: bad A/B");
    require(Q.rows() == A.rows() && Q.cols() == A.rows(), "lqr_gain: bad Q");
    require(R.rows() == B.cols() && R.cols() == B.cols(), "lqr_gain: bad R");

    MatrixXd P = Q;
    const int max_iter = 100000;
    for (int it = 0; it < max_iter; ++it) {
        const MatrixXd BtP = B.transpose() * P;
        const MatrixXd G = (R + BtP * B).ldlt().solve(BtP * A);
        const MatrixXd Pn = Q + A.transpose() * P * A - A.transpose() * P * B * G;
        const double delta = (Pn - P).cwiseAbs().maxCoeff();
        P = 0.5 * (Pn + Pn.transpose().eval());
        if (delta <= 1e-12 * (1.0 + P.cwiseAbs().maxCoeff())) break;
    }
    const MatrixXd BtP = B.transpose() * P;
    MatrixXd K = -(R + BtP * B).ldlt().solve(BtP * A);
    return K;
}

} // namespace prsmpc::lti
