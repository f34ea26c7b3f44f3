#include "prsmpc/gaussians.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace prsmpc::gaussians {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require(bool cond, const char* what) {
    if (!cond) throw DimensionMismatch(what);
}

} // namespace

GaussianSequence::GaussianSequence(VectorXd mean_, MatrixXd cov_, int block_)
    : mean(std::move(mean_)), cov(std::move(cov_)), block(block_) {
    require(block >= 1, "GaussianSequence: block size must be >= 1");
    require(mean.size() % block == 0, "GaussianSequence: mean not a block multiple");
    require(cov.rows() == mean.size() && cov.cols() == mean.size(),
            "GaussianSequence: covariance size mismatch");
    const double scale = 1.0 + cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw DimensionMismatch("GaussianSequence: covariance not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw DimensionMismatch("GaussianSequence: covariance not PSD");
    }
}

bool GaussianSequence::block_diagonal(double tol) const {
    const int T = steps();
    for (int i = 0; i < T; ++i) {
        for (int j = 0; j < T; ++j) {
            if (i == j) continue;
            if (block_cov(i, j).cwiseAbs().maxCoeff() > tol) return false;
        }
    }
    return true;
}

ConditioningPlan::ConditioningPlan(const GaussianSequence& seq, int observed_steps,
                                   int window)
    : block_(seq.block), observed_steps_(observed_steps) {
    if (window < 0 || observed_steps < 0 ||
        observed_steps + window + 1 > seq.steps()) {
        throw WindowExceedsHorizon(
            "condition: prefix " + std::to_string(observed_steps) + " + window " +
            std::to_string(window + 1) + " exceeds sequence of " +
            std::to_string(seq.steps()) + " steps");
    }
    const int na = observed_steps * block_;
    const int nb = (window + 1) * block_;
    mean_obs_ = seq.mean.head(na);
    mean_win_ = seq.mean.segment(na, nb);
    const MatrixXd sigma_bb = seq.cov.block(na, na, nb, nb);
    if (na == 0) {
        gain_ = MatrixXd::Zero(nb, 0);
        cond_cov_ = sigma_bb;
        return;
    }
    MatrixXd sigma_aa = seq.cov.topLeftCorner(na, na);
    const MatrixXd sigma_ba = seq.cov.block(na, 0, nb, na);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma_aa, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 1e-12) {
        // Long correlated prefixes go numerically singular; regularize the
        // solve instead of forming an explicit pseudo-inverse.
        sigma_aa.diagonal().array() += 1e-10 * sigma_aa.trace() / na;
    }
    const auto solver = sigma_aa.ldlt();
    gain_ = solver.solve(sigma_ba.transpose()).transpose();
    cond_cov_ = sigma_bb - gain_ * sigma_ba.transpose();
    cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose().eval());
}

ConditionalWindow ConditioningPlan::apply(const VectorXd& observed) const {
    require(observed.size() == observed_steps_ * block_,
            "condition: observed prefix size mismatch");
    ConditionalWindow win;
    win.block = block_;
    win.cov = cond_cov_;
    if (observed_steps_ == 0) {
        win.mean = mean_win_;
    } else {
        win.mean = mean_win_ + gain_ * (observed - mean_obs_);
    }
    return win;
}

ConditionalWindow condition(const GaussianSequence& seq, const VectorXd& observed,
                            int window) {
    if (observed.size() % seq.block != 0) {
        throw DimensionMismatch("condition: observed prefix not a block multiple");
    }
    const int k = static_cast<int>(observed.size()) / seq.block;
    return ConditioningPlan(seq, k, window).apply(observed);
}

double NormalSampler::operator()() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 53-bit uniforms; u1 shifted away from zero for the logarithm.
    const double u1 =
        (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
}

VectorXd NormalSampler::vector(int n) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = (*this)();
    return v;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 finalizer over master + index stream position.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

MatrixXd psd_sqrt(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<VectorXd> sample(const GaussianSequence& seq, std::uint64_t seed,
                             int count) {
    const MatrixXd root = psd_sqrt(seq.cov);
    NormalSampler normal(seed);
    std::vector<VectorXd> out;
    out.reserve(count);
    const int n = static_cast<int>(seq.mean.size());
    for (int s = 0; s < count; ++s) {
        out.push_back(seq.mean + root * normal.vector(n));
    }
    return out;
}

double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        // Series expansion.
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 10000; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Continued fraction for Q(a, x) = 1 - P(a, x) (Lentz's method).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

double chi2_cdf(int dof, double x) {
    if (dof < 1) throw InvalidProbability("chi2_cdf: dof must be >= 1");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(int dof, double p) {
    if (dof < 1) throw InvalidProbability("chi2_quantile: dof must be >= 1");
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidProbability("chi2_quantile: p must lie in (0, 1)");
    }
    double lo = 0.0;
    double hi = dof + 40.0 * std::sqrt(static_cast<double>(dof));
    while (chi2_cdf(dof, hi) < p) hi *= 2.0; // pathological p very close to 1
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(dof, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-9 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

double chebyshev_level(int dim, double p) {
    if (dim < 1) throw InvalidProbability("chebyshev_level: dim must be >= 1");
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidProbability("chebyshev_level: p must lie in (0, 1)");
    }
    return static_cast<double>(dim) / (1.0 - p);
}

} // namespace prsmpc::gaussians
