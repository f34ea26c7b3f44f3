#pragma once

#include <Eigen/Dense>

#include "prsmpc/errors.hpp"

namespace prsmpc::prs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Ellipsoid { x : (x - c)' M^{-1} (x - c) <= 1 } with PSD shape matrix M.
// Degenerate shapes (singular M, including M = 0 for a single point) are
// first-class citizens: the support function sqrt(a' M a) never inverts M.
struct Ellipsoid {
    VectorXd center;
    MatrixXd shape;

    Ellipsoid() = default;
    Ellipsoid(VectorXd center, MatrixXd shape);

    static Ellipsoid point(VectorXd c);

    int dim() const { return static_cast<int>(center.size()); }
    double support(const VectorXd& dir) const;
    bool is_point(double tol = 0.0) const;
    // Membership with pseudo-inverse handling of degenerate directions.
    bool contains_point(const VectorXd& x, double tol = 1e-9) const;
};

// Halfspace intersection { x : A x <= b }, one row per halfspace.
struct Polytope {
    MatrixXd A;
    VectorXd b;

    Polytope() = default;
    Polytope(MatrixXd A, VectorXd b);

    static Polytope box(const VectorXd& lo, const VectorXd& hi);
    static Polytope unbounded(int dim);

    int dim() const { return static_cast<int>(A.cols()); }
    int rows() const { return static_cast<int>(A.rows()); }
    bool contains(const VectorXd& x, double tol = 1e-9) const;
    // Cheap sufficient emptiness test from contradictory parallel rows; a
    // full feasibility check lives with the QP-backed validation path.
    bool obviously_empty() const;
};

} // namespace prsmpc::prs
