#pragma once

#include "bltail/meanvalue.hpp"
#include "bltail/strip.hpp"

#include <memory>

namespace bltail {

/// Integrated normal derivative of the half-space Green kernel of the
/// homogenized operator. By the Poisson-representation identity it equals
/// (A(n))^{-1} with a_{kj}(n) = -n^t A^0_{kj} n; the per-component vectors are
/// I^a(n) = n_a I(n).
struct IntegratedGreen {
    Eigen::VectorXd n;
    Eigen::MatrixXd An;  // a_{kj}(n) = -n^t A^0_{kj} n
    Eigen::MatrixXd I;   // A(n)^{-1}

    Eigen::MatrixXd alpha(int a) const { return n[a] * I; }
};

inline IntegratedGreen integrated_green(const HomogenizedTensor& A0, const Eigen::VectorXd& n) {
    if (A0.lambda0 <= 0)
        throw std::invalid_argument("integrated_green: homogenized tensor is not elliptic");
    const int N = A0.N;
    IntegratedGreen ig;
    ig.n = n;
    ig.An.resize(N, N);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) ig.An(k, j) = -n.dot(A0.spatial(k, j) * n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ig.An);
    if (!lu.isInvertible() || lu.rcond() < 1e-12)
        throw solver_error("integrated_green: A(n) numerically singular; inconsistent input");
    ig.I = lu.inverse();
    return ig;
}

// ── Laplace oracle ────────────────────────────────────────────────────────

/// Explicit half-space solution for the Laplacian (N = 1) with periodic
/// Dirichlet data v0 and irrational normal n:
/// u(y) = sum_xi c_xi(v0) e^{-2 pi sqrt(|xi|^2 - (n.xi)^2) (y.n)}
///              e^{2 pi i xi . (y - n (y.n))}.
inline Complex laplace_halfspace_value(const PeriodicField& v0, const Direction& n,
                                       const Eigen::VectorXd& y) {
    if (v0.rows() != 1 || v0.cols() != 1)
        throw std::invalid_argument("laplace_halfspace_value: scalar data required");
    const double yn = y.dot(n.n);
    Complex s = 0;
    for (const auto& [xi, c] : v0.coeffs()) {
        double x2 = 0, xn = 0;
        for (int k = 0; k < n.dim(); ++k) {
            x2 += double(xi[k]) * xi[k];
            xn += xi[k] * n.n[k];
        }
        double gap = x2 - xn * xn;
        if (!is_zero(xi) && gap <= 0)
            throw solver_error("laplace_halfspace_value: resonant mode; direction mis-classified");
        double tang = dot(xi, y) - xn * yn;
        s += c(0, 0) * std::exp(-2.0 * pi * std::sqrt(std::max(0.0, gap)) * yn) *
             std::exp(two_pi_i * tang);
    }
    return s;
}

/// The tail of the Laplace solution is the plain average c_0(v0).
inline Eigen::MatrixXcd laplace_tail(const PeriodicField& v0) {
    return v0.coeff(Freq(v0.dim(), 0));
}

/// Slowest decay rate of the Laplace solution over the supported spectrum:
/// 2 pi min_{xi != 0} sqrt(|xi|^2 - (n.xi)^2).
inline double laplace_decay_rate(const PeriodicField& v0, const Direction& n) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [xi, c] : v0.coeffs()) {
        if (is_zero(xi)) continue;
        (void)c;
        double x2 = 0, xn = 0;
        for (int k = 0; k < n.dim(); ++k) {
            x2 += double(xi[k]) * xi[k];
            xn += xi[k] * n.n[k];
        }
        best = std::min(best, 2.0 * pi * std::sqrt(std::max(0.0, x2 - xn * xn)));
    }
    return best;
}

// ── representation-formula route ──────────────────────────────────────────

/// Per-direction context for the tail representation formula: the integrated
/// Green kernel of A^0 plus the boundary Fourier data of the d boundary-layer
/// correctors. Orientation convention: the overall sign is pinned by the
/// requirement that constant boundary data on a constant-coefficient operator
/// returns itself (an analytically forced answer), which fixes the sign left
/// open by the inherited Green-kernel and conormal conventions.
class TailContext {
public:
    TailContext(const PeriodicTensor& A, const HomogenizedTensor& A0,
                const CorrectorSet& chi_star, std::vector<CorrectorTrace> traces,
                Direction dir)
        : A_(&A), chi_star_(&chi_star), traces_(std::move(traces)),
          dir_(std::move(dir)), ig_(integrated_green(A0, dir_.n)) {
        const int d = A.dim(), N = A.sys();
        if (A0.N != N) throw dependency_error("TailContext: system size mismatch");
        if ((int)traces_.size() != d)
            throw dependency_error("TailContext: need one corrector trace per alpha");
        if ((int)chi_star.per_gamma.size() != d)
            throw dependency_error("TailContext: corrector set incomplete");
        // quasi-periodic series of d_b (v^{*,a})^t on the boundary hyperplane,
        // with frequency matrix T0^{-t} (exact integers for unimodular T0)
        grad_series_.assign(size_t(d) * d, nullptr);
        for (int a = 0; a < d; ++a) {
            const CorrectorTrace& tr = traces_[a];
            if (tr.trivial) continue;
            RationalMatrix T = RationalMatrix::from_integer(IntMatrix(tr.frame.T0_inv.transpose()));
            for (int b = 0; b < d; ++b) {
                auto qps = std::make_shared<QuasiPeriodicSeries>(d, N, N, T);
                for (const auto& [etap, c0] : tr.C0) {
                    (void)c0;
                    Freq eta(etap);
                    eta.push_back(0);
                    // transpose applied as written in the formula
                    qps->set_coeff(eta, tr.gradient_coeff(etap, b).transpose());
                }
                grad_series_[size_t(a) * d + b] = qps;
            }
        }
    }

    const Direction& direction() const { return dir_; }
    const IntegratedGreen& green() const { return ig_; }

    /// v_xi^inf(n) for boundary data e^{2 pi i xi . y} I_N.
    Eigen::MatrixXcd tail(const Freq& xi) const {
        const int d = A_->dim(), N = A_->sys();
        auto shifted = shifted_blocks(xi);
        Eigen::MatrixXcd bracket = Eigen::MatrixXcd::Zero(N, N);
        for (int a = 0; a < d; ++a) {
            Eigen::MatrixXcd term = Eigen::MatrixXcd::Zero(N, N);
            // c_xi(A^{ba}) n_b
            for (int b = 0; b < d; ++b) term += dir_.n[b] * A_->coeff(xi, b, a);
            // c_xi( d_b (chi^{*,a})^t A^{bg} ) n_g
            const PeriodicField& chi = chi_star_->per_gamma[a].chi;
            for (const auto& [eta, X] : chi.coeffs()) {
                const TensorBlock* blk = A_->block(sub(xi, eta));
                if (!blk) continue;
                for (int b = 0; b < d; ++b) {
                    Eigen::MatrixXcd dchi_t = (two_pi_i * double(eta[b])) * X.transpose();
                    for (int g = 0; g < d; ++g) term += dir_.n[g] * (dchi_t * blk->at(b, g));
                }
            }
            // M{ d_b (v^{*,a})^t e^{2 pi i xi . y} A^{bg} } n_g
            if (!traces_[a].trivial)
                for (int b = 0; b < d; ++b)
                    for (int g = 0; g < d; ++g)
                        term += dir_.n[g] *
                                product_mean(*grad_series_[size_t(a) * d + b], shifted[size_t(b) * d + g], dir_);
            bracket += dir_.n[a] * term;
        }
        // calibrated orientation: -I(n) x bracket
        return -ig_.I * bracket;
    }

    /// Third-mean term alone, contracted with n_a n_g (diagnostics; vanishes
    /// for divergence-free rows).
    Eigen::MatrixXcd third_mean(const Freq& xi) const {
        const int d = A_->dim(), N = A_->sys();
        auto shifted = shifted_blocks(xi);
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(N, N);
        for (int a = 0; a < d; ++a) {
            if (traces_[a].trivial) continue;
            for (int b = 0; b < d; ++b)
                for (int g = 0; g < d; ++g)
                    acc += dir_.n[a] * dir_.n[g] *
                           product_mean(*grad_series_[size_t(a) * d + b], shifted[size_t(b) * d + g], dir_);
        }
        return acc;
    }

private:
    /// e^{2 pi i xi . y} A^{bg}(y) as (complex-valued) periodic fields.
    std::vector<PeriodicField> shifted_blocks(const Freq& xi) const {
        const int d = A_->dim(), N = A_->sys();
        std::vector<PeriodicField> out(size_t(d) * d, PeriodicField(d, N, N));
        for (const auto& [zeta, c] : A_->coeffs())
            for (int b = 0; b < d; ++b)
                for (int g = 0; g < d; ++g)
                    out[size_t(b) * d + g].set_coeff_raw(add(zeta, xi), c.at(b, g));
        return out;
    }

    const PeriodicTensor* A_;
    const CorrectorSet* chi_star_;
    std::vector<CorrectorTrace> traces_;
    Direction dir_;
    IntegratedGreen ig_;
    std::vector<std::shared_ptr<QuasiPeriodicSeries>> grad_series_;
};

/// One-call form of the representation formula.
inline Eigen::MatrixXcd tail_via_formula(const PeriodicTensor& A, const HomogenizedTensor& A0,
                                         const CorrectorSet& chi_star,
                                         const std::vector<CorrectorTrace>& traces,
                                         const Freq& xi, const Direction& n) {
    return TailContext(A, A0, chi_star, traces, n).tail(xi);
}

/// Assembled per-mode tails for one direction, with provenance.
struct TailEntry {
    Eigen::MatrixXcd value;
    std::string route;      // "formula", "strip", "laplace"
    double err_bound = 0;
};

struct TailTable {
    Eigen::VectorXd n;
    double angle = std::numeric_limits<double>::quiet_NaN(); // n . nu0
    std::map<Freq, TailEntry> entries;
    double max_norm() const {
        double m = 0;
        for (const auto& [xi, e] : entries) m = std::max(m, e.value.cwiseAbs().maxCoeff());
        return m;
    }
};

} // namespace bltail
