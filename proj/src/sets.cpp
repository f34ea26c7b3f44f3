#include "prsmpc/sets.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace prsmpc::prs {

Ellipsoid::Ellipsoid(VectorXd center_, MatrixXd shape_)
    : center(std::move(center_)), shape(std::move(shape_)) {
    if (shape.rows() != shape.cols() || shape.rows() != center.size()) {
        throw DimensionMismatch("Ellipsoid: shape must be square and match center");
    }
    const double scale = 1.0 + shape.cwiseAbs().maxCoeff();
    if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw DimensionMismatch("Ellipsoid: shape not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(shape, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw DimensionMismatch("Ellipsoid: shape not PSD");
    }
}

Ellipsoid Ellipsoid::point(VectorXd c) {
    const int n = static_cast<int>(c.size());
    return Ellipsoid(std::move(c), MatrixXd::Zero(n, n));
}

double Ellipsoid::support(const VectorXd& dir) const {
    if (dir.size() != center.size()) {
        throw DimensionMismatch("Ellipsoid::support: direction size mismatch");
    }
    const double quad = dir.dot(shape * dir);
    return dir.dot(center) + std::sqrt(std::max(quad, 0.0));
}

bool Ellipsoid::is_point(double tol) const {
    return shape.cwiseAbs().maxCoeff() <= tol;
}

bool Ellipsoid::contains_point(const VectorXd& x, double tol) const {
    if (x.size() != center.size()) {
        throw DimensionMismatch("Ellipsoid::contains_point: size mismatch");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(shape);
    const VectorXd vals = es.eigenvalues();
    const VectorXd d = es.eigenvectors().transpose() * (x - center);
    const double vmax = std::max(vals.maxCoeff(), 0.0);
    const double cutoff = std::max(vmax, 1.0) * 1e-12;
    double quad = 0.0;
    for (int i = 0; i < vals.size(); ++i) {
        if (vals[i] <= cutoff) {
            // Degenerate direction: the point must sit on the affine slice.
            if (std::abs(d[i]) > tol * (1.0 + std::sqrt(vmax))) return false;
        } else {
            quad += d[i] * d[i] / vals[i];
        }
    }
    return quad <= 1.0 + tol;
}

Polytope::Polytope(MatrixXd A_, VectorXd b_) : A(std::move(A_)), b(std::move(b_)) {
    if (A.rows() != b.size()) {
        throw DimensionMismatch("Polytope: row count mismatch between A and b");
    }
    for (int i = 0; i < A.rows(); ++i) {
        if (A.row(i).cwiseAbs().maxCoeff() == 0.0) {
            throw DimensionMismatch("Polytope: zero normal row");
        }
    }
}

Polytope Polytope::box(const VectorXd& lo, const VectorXd& hi) {
    if (lo.size() != hi.size()) {
        throw DimensionMismatch("Polytope::box: bound size mismatch");
    }
    const int n = static_cast<int>(lo.size());
    MatrixXd A(2 * n, n);
    VectorXd b(2 * n);
    A.topRows(n) = MatrixXd::Identity(n, n);
    A.bottomRows(n) = -MatrixXd::Identity(n, n);
    b.head(n) = hi;
    b.tail(n) = -lo;
    return Polytope(std::move(A), std::move(b));
}

Polytope Polytope::unbounded(int dim) {
    Polytope p;
    p.A = MatrixXd::Zero(0, dim);
    p.b = VectorXd::Zero(0);
    return p;
}

bool Polytope::contains(const VectorXd& x, double tol) const {
    if (rows() == 0) return true;
    if (x.size() != dim()) {
        throw DimensionMismatch("Polytope::contains: size mismatch");
    }
    return ((A * x - b).array() <= tol).all();
}

bool Polytope::obviously_empty() const {
    for (int i = 0; i < rows(); ++i) {
        const double ni = A.row(i).norm();
        for (int j = i + 1; j < rows(); ++j) {
            const double nj = A.row(j).norm();
            // Anti-parallel pair a x <= b_i, -a x <= b_j requires b_i + b_j >= 0.
            const VectorXd sum = (A.row(i) / ni + A.row(j) / nj).transpose();
            if (sum.cwiseAbs().maxCoeff() < 1e-12 &&
                b[i] / ni + b[j] / nj < -1e-12) {
                return true;
            }
        }
    }
    return false;
}

} // namespace prsmpc::prs
