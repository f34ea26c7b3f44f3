#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "prsmpc/errors.hpp"

namespace prsmpc::qp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense convex QP: minimize 0.5 y'Hy + g'y subject to A_eq y = b_eq and
// A_in y <= b_in. H must be symmetric PSD.
struct QuadraticProgram {
    MatrixXd H;
    VectorXd g;
    MatrixXd A_eq;
    VectorXd b_eq;
    MatrixXd A_in;
    VectorXd b_in;
};

enum class QpStatus { optimal, infeasible, max_iter };

struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;

    double max() const;
};

struct QpSolution {
    VectorXd y;
    VectorXd lambda; // multipliers for the stacked two-sided rows
    double objective = 0.0;
    QpStatus status = QpStatus::max_iter;
    KktResiduals kkt;      // evaluated on the internally equilibrated data
    int iterations = 0;
    VectorXd certificate;  // Farkas-type ray when status == infeasible
};

struct QpSettings {
    int max_iter = 20000;
    double eps_abs = 5e-7;            // residual target on equilibrated data
    double eps_polish_trigger = 5e-4; // attempt active-set polish below this
    double sigma = 1e-6;
    double alpha = 1.6;
    double rho0 = 0.1;
    int check_interval = 25;
    int scaling_iters = 10;
    double eps_infeasible = 1e-7;
    bool polish = true;
};

// Operator-splitting solver for min 0.5 y'Hy + g'y s.t. l <= Cy <= u.
//
// The quadratic and constraint matrices are fixed at construction so the
// equilibration and KKT factorization are reused across solves; only the
// vectors (g, l, u) change between calls. This is the shape of the repeated
// receding-horizon solves this library performs.
class QpWorkspace {
public:
    QpWorkspace(MatrixXd H, MatrixXd C, QpSettings settings = {});

    QpSolution solve(const VectorXd& g, const VectorXd& l, const VectorXd& u,
                     const VectorXd* warm_y = nullptr,
                     const VectorXd* warm_lambda = nullptr);

    int vars() const { return n_; }
    int rows() const { return m_; }

private:
    void factorize();
    bool polish(const VectorXd& gs, const VectorXd& ls, const VectorXd& us,
                VectorXd& ys, VectorXd& zs, VectorXd& lams,
                KktResiduals& res) const;
    KktResiduals residuals(const VectorXd& gs, const VectorXd& ls,
                           const VectorXd& us, const VectorXd& ys,
                           const VectorXd& lams) const;

    QpSettings settings_;
    int n_ = 0;
    int m_ = 0;

    // Equilibrated data and scaling diagonals (y = D ys, lambda = E lams).
    MatrixXd Hs_, Cs_;
    VectorXd D_, E_;

    double rho_bar_;
    VectorXd rho_;       // per-row, equality rows boosted
    std::vector<bool> eq_row_;
    bool factored_ = false;
    Eigen::PartialPivLU<MatrixXd> kkt_lu_;

    // Persistent iterates reused as the default warm start.
    VectorXd y_, z_, lam_;
};

// One-shot interface over QuadraticProgram. Deterministic for fixed inputs.
QpSolution solve(const QuadraticProgram& qp,
                 const std::optional<VectorXd>& warm_start = std::nullopt,
                 const QpSettings& settings = QpSettings());

} // namespace prsmpc::qp
