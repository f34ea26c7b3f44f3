#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "prsmpc/errors.hpp"

namespace prsmpc::gaussians {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Jointly Gaussian stacked disturbance sequence [w(0); ...; w(T-1)] with
// blocks of size `block`. Covariance may be singular (kernels built from
// low-rank couplings are common), but must be symmetric PSD up to tolerance.
struct GaussianSequence {
    VectorXd mean;
    MatrixXd cov;
    int block = 1;

    GaussianSequence(VectorXd mean, MatrixXd cov, int block);

    int steps() const { return static_cast<int>(mean.size()) / block; }
    VectorXd block_mean(int k) const { return mean.segment(k * block, block); }
    MatrixXd block_cov(int k, int j) const {
        return cov.block(k * block, j * block, block, block);
    }
    bool block_diagonal(double tol = 1e-14) const;
};

// Gaussian law of the next `steps()` disturbance blocks given an observed
// prefix. For block-diagonal covariances this coincides with the marginal.
struct ConditionalWindow {
    VectorXd mean;
    MatrixXd cov;
    int block = 1;

    int steps() const { return static_cast<int>(mean.size()) / block; }
    VectorXd block_mean(int k) const { return mean.segment(k * block, block); }
    MatrixXd block_cov(int k, int j) const {
        return cov.block(k * block, j * block, block, block);
    }
};

// Condition the sequence on realized values of its first blocks. `observed`
// holds k stacked blocks; the window covers the next `window + 1` blocks.
ConditionalWindow condition(const GaussianSequence& seq, const VectorXd& observed,
                            int window);

// Precomputed conditioning gain for a fixed prefix length; the covariance of
// the window does not depend on the observed values, only its mean does.
class ConditioningPlan {
public:
    ConditioningPlan(const GaussianSequence& seq, int observed_steps, int window);

    ConditionalWindow apply(const VectorXd& observed) const;

    const MatrixXd& window_cov() const { return cond_cov_; }
    int observed_steps() const { return observed_steps_; }

private:
    int block_ = 1;
    int observed_steps_ = 0;
    VectorXd mean_obs_;
    VectorXd mean_win_;
    MatrixXd gain_; // cov(win, obs) * cov(obs, obs)^{-1}
    MatrixXd cond_cov_;
};

// Deterministic standard-normal stream: mt19937_64 bits through Box-Muller,
// so results do not depend on the standard library's normal_distribution.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

    double operator()();
    VectorXd vector(int n);

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derive an independent per-trial seed from a master seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Symmetric PSD square root by eigendecomposition, clamping negative
// eigenvalues at zero.
MatrixXd psd_sqrt(const MatrixXd& m);

// Draw `count` stacked realizations; deterministic for a given seed.
std::vector<VectorXd> sample(const GaussianSequence& seq, std::uint64_t seed,
                             int count);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// CDF of the chi-squared distribution with `dof` degrees of freedom.
double chi2_cdf(int dof, double x);

// Quantile of the chi-squared distribution, solved by bisection on the CDF.
double chi2_quantile(int dof, double p);

// Distribution-free ellipsoid scaling: coverage p needs scale dim / (1 - p).
double chebyshev_level(int dim, double p);

} // namespace prsmpc::gaussians
