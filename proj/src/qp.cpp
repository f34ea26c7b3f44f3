#include "prsmpc/qp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace prsmpc::qp {

namespace {

double finite_or(double v, double fallback) {
    return std::isfinite(v) ? v : fallback;
}

} // namespace

double KktResiduals::max() const {
    return std::max(std::max(stationarity, primal),
                    std::max(dual, complementarity));
}

QpWorkspace::QpWorkspace(MatrixXd H, MatrixXd C, QpSettings settings)
    : settings_(settings),
      n_(static_cast<int>(H.rows())),
      m_(static_cast<int>(C.rows())),
      rho_bar_(settings.rho0) {
    if (H.cols() != n_) throw DimensionMismatch("QpWorkspace: H must be square");
    if (C.cols() != n_) throw DimensionMismatch("QpWorkspace: C column mismatch");
    const double hscale = 1.0 + H.cwiseAbs().maxCoeff();
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * hscale) {
        throw DimensionMismatch("QpWorkspace: H not symmetric");
    }

    // Modified Ruiz equilibration on the stacked [H C'; C 0] data.
    Hs_ = std::move(H);
    Cs_ = std::move(C);
    D_ = VectorXd::Ones(n_);
    E_ = VectorXd::Ones(m_);
    for (int pass = 0; pass < settings_.scaling_iters; ++pass) {
        VectorXd dv(n_), ev(m_);
        for (int i = 0; i < n_; ++i) {
            double r = Hs_.row(i).cwiseAbs().maxCoeff();
            if (m_ > 0) r = std::max(r, Cs_.col(i).cwiseAbs().maxCoeff());
            dv[i] = r > 1e-12 ? 1.0 / std::sqrt(r) : 1.0;
        }
        for (int j = 0; j < m_; ++j) {
            const double r = Cs_.row(j).cwiseAbs().maxCoeff();
            ev[j] = r > 1e-12 ? 1.0 / std::sqrt(r) : 1.0;
        }
        Hs_ = dv.asDiagonal() * Hs_ * dv.asDiagonal();
        if (m_ > 0) Cs_ = ev.asDiagonal() * Cs_ * dv.asDiagonal();
        D_ = D_.cwiseProduct(dv);
        E_ = E_.cwiseProduct(ev);
    }
    Hs_ = 0.5 * (Hs_ + Hs_.transpose().eval());

    eq_row_.assign(m_, false);
    rho_ = VectorXd::Constant(m_, rho_bar_);
    y_ = VectorXd::Zero(n_);
    z_ = VectorXd::Zero(m_);
    lam_ = VectorXd::Zero(m_);
}

void QpWorkspace::factorize() {
    MatrixXd kkt = MatrixXd::Zero(n_ + m_, n_ + m_);
    kkt.topLeftCorner(n_, n_) = Hs_;
    kkt.topLeftCorner(n_, n_).diagonal().array() += settings_.sigma;
    if (m_ > 0) {
        kkt.topRightCorner(n_, m_) = Cs_.transpose();
        kkt.bottomLeftCorner(m_, n_) = Cs_;
        kkt.bottomRightCorner(m_, m_).diagonal() = -rho_.cwiseInverse();
    }
    kkt_lu_.compute(kkt);
    factored_ = true;
}

KktResiduals QpWorkspace::residuals(const VectorXd& gs, const VectorXd& ls,
                                    const VectorXd& us, const VectorXd& ys,
                                    const VectorXd& lams) const {
    KktResiduals r;
    const VectorXd grad = Hs_ * ys + gs + Cs_.transpose() * lams;
    r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (m_ == 0) return r;
    const VectorXd cy = Cs_ * ys;
    for (int i = 0; i < m_; ++i) {
        const double over = std::max(cy[i] - us[i], 0.0);
        const double under = std::max(ls[i] - cy[i], 0.0);
        r.primal = std::max(r.primal, std::max(over, under));
        if (lams[i] > 0.0 && !std::isfinite(us[i])) {
            r.dual = std::max(r.dual, lams[i]);
        }
        if (lams[i] < 0.0 && !std::isfinite(ls[i])) {
            r.dual = std::max(r.dual, -lams[i]);
        }
        // Complementarity: distance to the bound the multiplier pushes on.
        double slack = 0.0;
        if (lams[i] > 0.0) {
            slack = std::isfinite(us[i]) ? std::abs(us[i] - cy[i]) : kInf;
        } else if (lams[i] < 0.0) {
            slack = std::isfinite(ls[i]) ? std::abs(cy[i] - ls[i]) : kInf;
        }
        r.complementarity =
            std::max(r.complementarity, std::min(std::abs(lams[i]), slack));
    }
    return r;
}

bool QpWorkspace::polish(const VectorXd& gs, const VectorXd& ls, const VectorXd& us,
                         VectorXd& ys, VectorXd& zs, VectorXd& lams,
                         KktResiduals& res) const {
    std::vector<int> act;
    std::vector<double> act_rhs;
    std::vector<int> act_sign; // +1 upper bound, -1 lower bound
    for (int i = 0; i < m_; ++i) {
        if (eq_row_[i]) {
            act.push_back(i);
            act_rhs.push_back(us[i]);
            act_sign.push_back(0);
        } else if (lams[i] > 1e-9) {
            act.push_back(i);
            act_rhs.push_back(us[i]);
            act_sign.push_back(1);
        } else if (lams[i] < -1e-9) {
            act.push_back(i);
            act_rhs.push_back(ls[i]);
            act_sign.push_back(-1);
        }
    }
    const int na = static_cast<int>(act.size());
    MatrixXd kkt = MatrixXd::Zero(n_ + na, n_ + na);
    kkt.topLeftCorner(n_, n_) = Hs_;
    kkt.topLeftCorner(n_, n_).diagonal().array() += 1e-10;
    MatrixXd Ca(na, n_);
    VectorXd ba(na);
    for (int a = 0; a < na; ++a) {
        Ca.row(a) = Cs_.row(act[a]);
        ba[a] = act_rhs[a];
        if (!std::isfinite(ba[a])) return false;
    }
    kkt.topRightCorner(n_, na) = Ca.transpose();
    kkt.bottomLeftCorner(na, n_) = Ca;
    kkt.bottomRightCorner(na, na).diagonal().array() = -1e-10;

    VectorXd rhs(n_ + na);
    rhs.head(n_) = -gs;
    rhs.tail(na) = ba;

    Eigen::PartialPivLU<MatrixXd> lu(kkt);
    VectorXd sol = lu.solve(rhs);
    // One step of iterative refinement against the unregularized system.
    {
        VectorXd resid = rhs;
        resid.head(n_) -= Hs_ * sol.head(n_) + Ca.transpose() * sol.tail(na);
        resid.tail(na) -= Ca * sol.head(n_);
        sol += lu.solve(resid);
    }

    VectorXd y_new = sol.head(n_);
    VectorXd lam_new = VectorXd::Zero(m_);
    for (int a = 0; a < na; ++a) {
        double nu = sol[n_ + a];
        // Multipliers on inequality rows must push outward.
        if (act_sign[a] == 1 && nu < 0.0) nu = 0.0;
        if (act_sign[a] == -1 && nu > 0.0) nu = 0.0;
        lam_new[act[a]] = nu;
    }
    const KktResiduals cand = residuals(gs, ls, us, y_new, lam_new);
    if (cand.max() <= std::min(settings_.eps_abs, res.max())) {
        ys = y_new;
        lams = lam_new;
        zs = Cs_ * y_new;
        res = cand;
        return true;
    }
    return false;
}

QpSolution QpWorkspace::solve(const VectorXd& g, const VectorXd& l, const VectorXd& u,
                              const VectorXd* warm_y, const VectorXd* warm_lambda) {
    if (g.size() != n_ || l.size() != m_ || u.size() != m_) {
        throw DimensionMismatch("QpWorkspace::solve: vector size mismatch");
    }
    const VectorXd gs = D_.cwiseProduct(g);
    VectorXd ls(m_), us(m_);
    bool mask_changed = false;
    for (int i = 0; i < m_; ++i) {
        ls[i] = std::isfinite(l[i]) ? E_[i] * l[i] : -kInf;
        us[i] = std::isfinite(u[i]) ? E_[i] * u[i] : kInf;
        if (ls[i] > us[i]) {
            throw DimensionMismatch("QpWorkspace::solve: l > u in row " +
                                    std::to_string(i));
        }
        const bool eq = std::isfinite(ls[i]) && std::isfinite(us[i]) &&
                        us[i] - ls[i] < 1e-14 * (1.0 + std::abs(us[i]));
        if (eq != eq_row_[i]) {
            eq_row_[i] = eq;
            mask_changed = true;
        }
    }
    if (mask_changed) {
        for (int i = 0; i < m_; ++i) {
            rho_[i] = eq_row_[i] ? 1e3 * rho_bar_ : rho_bar_;
        }
        factored_ = false;
    }
    if (!factored_) factorize();

    if (warm_y) {
        y_ = D_.cwiseInverse().cwiseProduct(*warm_y);
        z_ = Cs_ * y_;
    }
    if (warm_lambda) {
        lam_ = E_.cwiseInverse().cwiseProduct(*warm_lambda);
    }

    QpSolution out;
    VectorXd rhs(n_ + m_), lam_prev_check = lam_;
    KktResiduals res;
    int it = 0;
    int stalled_checks = 0;
    double last_primal = kInf;
    QpStatus status = QpStatus::max_iter;

    for (it = 1; it <= settings_.max_iter; ++it) {
        rhs.head(n_) = settings_.sigma * y_ - gs;
        rhs.tail(m_) = z_ - rho_.cwiseInverse().cwiseProduct(lam_);
        const VectorXd sol = kkt_lu_.solve(rhs);
        const VectorXd y_tilde = sol.head(n_);
        const VectorXd nu = sol.tail(m_);
        const VectorXd z_tilde =
            z_ + rho_.cwiseInverse().cwiseProduct(nu - lam_);

        const double a = settings_.alpha;
        y_ = a * y_tilde + (1.0 - a) * y_;
        const VectorXd z_relax = a * z_tilde + (1.0 - a) * z_;
        VectorXd z_new = z_relax + rho_.cwiseInverse().cwiseProduct(lam_);
        for (int i = 0; i < m_; ++i) {
            z_new[i] = std::min(std::max(z_new[i], ls[i]), us[i]);
        }
        lam_ += rho_.cwiseProduct(z_relax - z_new);
        z_ = z_new;

        if (it % settings_.check_interval != 0 && it != settings_.max_iter) {
            continue;
        }

        res = residuals(gs, ls, us, y_, lam_);
        if (res.max() <= settings_.eps_abs ||
            (settings_.polish && res.max() <= settings_.eps_polish_trigger)) {
            VectorXd ys = y_, zs = z_, lams = lam_;
            KktResiduals polished = res;
            bool done = res.max() <= settings_.eps_abs;
            if (settings_.polish && polish(gs, ls, us, ys, zs, lams, polished)) {
                y_ = ys;
                z_ = zs;
                lam_ = lams;
                res = polished;
                done = true;
            }
            if (done) {
                status = QpStatus::optimal;
                break;
            }
        }

        // Primal infeasibility certificate from the dual increment.
        const VectorXd dlam = lam_ - lam_prev_check;
        lam_prev_check = lam_;
        const double dnorm = dlam.size() ? dlam.cwiseAbs().maxCoeff() : 0.0;
        if (dnorm > 1e-14) {
            const double ct = (Cs_.transpose() * dlam).cwiseAbs().maxCoeff();
            double gap = 0.0;
            bool certificate_ok = ct <= settings_.eps_infeasible * dnorm;
            for (int i = 0; i < m_ && certificate_ok; ++i) {
                const double dp = std::max(dlam[i], 0.0);
                const double dm = std::min(dlam[i], 0.0);
                if (dp > 1e-12 * dnorm && !std::isfinite(us[i])) certificate_ok = false;
                if (dm < -1e-12 * dnorm && !std::isfinite(ls[i])) certificate_ok = false;
                if (certificate_ok) {
                    gap += finite_or(us[i], 0.0) * dp + finite_or(ls[i], 0.0) * dm;
                }
            }
            if (certificate_ok && gap < -settings_.eps_infeasible * dnorm) {
                status = QpStatus::infeasible;
                out.certificate = E_.cwiseProduct(dlam) / dnorm;
                break;
            }
        }

        // Stall fallback: primal residual pinned high while duals run away.
        if (res.primal > 1e-4 && res.primal > 0.999 * last_primal &&
            lam_.cwiseAbs().maxCoeff() > 1e8) {
            if (++stalled_checks * settings_.check_interval >= 1000) {
                status = QpStatus::infeasible;
                out.certificate =
                    E_.cwiseProduct(lam_) / lam_.cwiseAbs().maxCoeff();
                break;
            }
        } else {
            stalled_checks = 0;
        }
        last_primal = res.primal;

        // Residual-balancing step-size adaptation.
        if (m_ > 0 && it % (settings_.check_interval * 8) == 0) {
            const double pn = std::max({(Cs_ * y_).cwiseAbs().maxCoeff(),
                                        z_.cwiseAbs().maxCoeff(), 1e-12});
            const double dn = std::max({(Hs_ * y_).cwiseAbs().maxCoeff(),
                                        gs.cwiseAbs().maxCoeff(),
                                        (Cs_.transpose() * lam_).cwiseAbs().maxCoeff(),
                                        1e-12});
            const double ratio = std::sqrt((res.primal / pn) /
                                           std::max(res.stationarity / dn, 1e-18));
            const double rho_new =
                std::clamp(rho_bar_ * std::clamp(ratio, 1e-2, 1e2), 1e-6, 1e6);
            if (rho_new > 5.0 * rho_bar_ || rho_new < 0.2 * rho_bar_) {
                rho_bar_ = rho_new;
                for (int i = 0; i < m_; ++i) {
                    rho_[i] = eq_row_[i] ? 1e3 * rho_bar_ : rho_bar_;
                }
                factorize();
            }
        }
    }

    out.iterations = std::min(it, settings_.max_iter);
    out.status = status;
    out.y = D_.cwiseProduct(y_);
    out.lambda = E_.cwiseProduct(lam_);
    out.kkt = res;
    // Objective uses the original (unequilibrated) data.
    out.objective = 0.0;
    if (status != QpStatus::infeasible) {
        const VectorXd Hy = D_.cwiseInverse().asDiagonal() * (Hs_ * y_);
        out.objective = 0.5 * out.y.dot(Hy) + g.dot(out.y);
    }
    return out;
}

QpSolution solve(const QuadraticProgram& qp, const std::optional<VectorXd>& warm_start,
                 const QpSettings& settings) {
    const int n = static_cast<int>(qp.H.rows());
    if (qp.H.cols() != n || qp.g.size() != n) {
        throw DimensionMismatch("solve: H/g dimensions inconsistent");
    }
    {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(qp.H, Eigen::EigenvaluesOnly);
        const double scale = 1.0 + qp.H.cwiseAbs().maxCoeff();
        if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
            throw DimensionMismatch("solve: H must be PSD");
        }
    }
    const int me = static_cast<int>(qp.A_eq.rows());
    const int mi = static_cast<int>(qp.A_in.rows());
    if ((me && qp.A_eq.cols() != n) || (mi && qp.A_in.cols() != n)) {
        throw DimensionMismatch("solve: constraint column mismatch");
    }
    if (qp.b_eq.size() != me || qp.b_in.size() != mi) {
        throw DimensionMismatch("solve: constraint rhs mismatch");
    }

    MatrixXd C(me + mi, n);
    VectorXd l(me + mi), u(me + mi);
    if (me) {
        C.topRows(me) = qp.A_eq;
        l.head(me) = qp.b_eq;
        u.head(me) = qp.b_eq;
    }
    if (mi) {
        C.bottomRows(mi) = qp.A_in;
        l.tail(mi).setConstant(-kInf);
        u.tail(mi) = qp.b_in;
    }

    QpWorkspace ws(qp.H, std::move(C), settings);
    const VectorXd* warm = warm_start ? &*warm_start : nullptr;
    return ws.solve(qp.g, l, u, warm, nullptr);
}

} // namespace prsmpc::qp
