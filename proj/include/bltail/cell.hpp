#pragma once

#include "bltail/coeffs.hpp"

#include <set>

namespace bltail {

/// Solution of the periodic cell problem for one column index gamma:
/// -div(A grad chi^g) = d_a A^{a g} on the torus, zero mean.
struct Corrector {
    PeriodicField chi;     // N x N, zero frequency absent (exact zero mean)
    double residual = 0;   // relative residual of the Fourier-Galerkin system
};

struct CorrectorSet {
    std::vector<Corrector> per_gamma; // size d
    int cutoff = 0;
};

namespace detail {

/// Unknown frequency set for the Fourier-Galerkin cell solve: the box
/// |xi|_inf <= K intersected with the coupling component of the right-hand
/// side support. Modes outside never couple to the data, so restricting to
/// this set reproduces the full-box Galerkin solution exactly.
inline std::vector<Freq> galerkin_support(const PeriodicTensor& t, int K) {
    std::set<Freq> steps;
    for (const auto& [xi, c] : t.coeffs())
        if (!is_zero(xi) && c.norm() > 1e-300) steps.insert(xi);
    std::set<Freq> active(steps.begin(), steps.end());
    std::vector<Freq> queue(active.begin(), active.end());
    while (!queue.empty()) {
        Freq cur = queue.back();
        queue.pop_back();
        for (const auto& s : steps) {
            Freq nxt = add(cur, s);
            if (linf_norm(nxt) > K || is_zero(nxt)) continue;
            if (active.insert(nxt).second) queue.push_back(nxt);
        }
    }
    return {active.begin(), active.end()};
}

/// Apply the Galerkin operator: (G x)_rho = 4 pi^2 sum over eta and the
/// stored tensor frequencies zeta = rho - eta of rho_a eta_b c_zeta(A^{ab}).
inline void apply_galerkin(const PeriodicTensor& t,
                           const std::vector<Freq>& U,
                           const std::map<Freq, int>& index,
                           const Eigen::MatrixXcd& X, Eigen::MatrixXcd& Y,
                           bool adjoint) {
    const int d = t.dim(), N = t.sys();
    Y.setZero();
    for (const auto& [zeta, c] : t.coeffs()) {
        for (int je = 0; je < (int)U.size(); ++je) {
            const Freq& eta = U[je];
            Freq rho = add(eta, zeta);
            auto it = index.find(rho);
            if (it == index.end()) continue;
            int jr = it->second;
            Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(N, N);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    blk += (4.0 * pi * pi * rho[a] * eta[b]) * c.at(a, b);
            if (!adjoint)
                Y.middleRows(jr * N, N) += blk * X.middleRows(je * N, N);
            else
                Y.middleRows(je * N, N) += blk.adjoint() * X.middleRows(jr * N, N);
        }
    }
}

} // namespace detail

struct CellOptions {
    int dense_limit = 3200;  // switch to CG on the normal equations above this
    double tol = 1e-12;      // CG target (relative)
    int max_iter = 20000;
};

/// Solve the cell problem on the given tensor for all gamma at once.
/// The caller passes A for the classical correctors or A* for the adjoint
/// family chi^{*,g}.
inline CorrectorSet solve_cell_all(const PeriodicTensor& t, int K, const CellOptions& opts = {}) {
    const int d = t.dim(), N = t.sys();
    if (K < t.cutoff()) throw std::invalid_argument("solve_cell: cutoff below the tensor's own cutoff");
    t.validate();

    CorrectorSet set;
    set.cutoff = K;
    set.per_gamma.assign(d, Corrector{PeriodicField(d, N, N), 0.0});
    for (int g = 0; g < d; ++g) set.per_gamma[g].chi = PeriodicField(d, N, N);

    std::vector<Freq> U = detail::galerkin_support(t, K);
    if (U.empty()) return set; // constant tensor: chi = 0

    std::map<Freq, int> index;
    for (int i = 0; i < (int)U.size(); ++i) index[U[i]] = i;
    const int n_unknown = (int)U.size() * N;
    const int n_rhs = d * N;

    // right-hand sides: b_(rho,i) = 2 pi i rho_a c_rho(A^{a g}_{i c})
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n_unknown, n_rhs);
    for (int jr = 0; jr < (int)U.size(); ++jr) {
        const Freq& rho = U[jr];
        const TensorBlock* blk = t.block(rho);
        if (!blk) continue;
        for (int g = 0; g < d; ++g) {
            Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(N, N);
            for (int a = 0; a < d; ++a) rhs += (two_pi_i * double(rho[a])) * blk->at(a, g);
            B.block(jr * N, g * N, N, N) = rhs;
        }
    }

    Eigen::MatrixXcd X(n_unknown, n_rhs);
    double bnorm = B.norm();
    if (bnorm == 0) return set;

    if (n_unknown <= opts.dense_limit) {
        Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n_unknown, n_unknown);
        for (const auto& [zeta, c] : t.coeffs()) {
            for (int je = 0; je < (int)U.size(); ++je) {
                Freq rho = add(U[je], zeta);
                auto it = index.find(rho);
                if (it == index.end()) continue;
                Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(N, N);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b)
                        blk += (4.0 * pi * pi * rho[a] * U[je][b]) * c.at(a, b);
                G.block(it->second * N, je * N, N, N) += blk;
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(G);
        X = lu.solve(B);
    } else {
        // CG on the normal equations, matrix-free
        X.setZero();
        Eigen::MatrixXcd GX(n_unknown, n_rhs), tmp(n_unknown, n_rhs);
        detail::apply_galerkin(t, U, index, X, GX, false);
        Eigen::MatrixXcd R = B - GX; // residual of G x = b
        Eigen::MatrixXcd S(n_unknown, n_rhs);
        detail::apply_galerkin(t, U, index, R, S, true); // s = G^H r
        Eigen::MatrixXcd P = S;
        double snorm2 = S.squaredNorm();
        for (int it = 0; it < opts.max_iter && snorm2 > 0; ++it) {
            detail::apply_galerkin(t, U, index, P, GX, false); // q = G p
            double qn = GX.squaredNorm();
            if (qn == 0) break;
            double alpha = snorm2 / qn;
            X += alpha * P;
            R -= alpha * GX;
            if (R.norm() <= opts.tol * bnorm) break;
            detail::apply_galerkin(t, U, index, R, tmp, true);
            double snew = tmp.squaredNorm();
            P = tmp + (snew / snorm2) * P;
            S = tmp;
            snorm2 = snew;
        }
    }

    // residual check against all retained test frequencies
    Eigen::MatrixXcd GX(n_unknown, n_rhs);
    detail::apply_galerkin(t, U, index, X, GX, false);
    double res = (GX - B).norm() / bnorm;
    if (res > 1e-10)
        throw solver_error("solve_cell: Galerkin residual " + std::to_string(res) +
                           " above 1e-10 (possibly singular system)");

    for (int g = 0; g < d; ++g) {
        set.per_gamma[g].residual = (GX.middleCols(g * N, N) - B.middleCols(g * N, N)).norm() /
                                    std::max(B.middleCols(g * N, N).norm(), 1e-300);
        for (int j = 0; j < (int)U.size(); ++j) {
            Eigen::MatrixXcd v = X.block(j * N, g * N, N, N);
            if (v.cwiseAbs().maxCoeff() > 0) set.per_gamma[g].chi.set_coeff_raw(U[j], v);
        }
    }
    return set;
}

/// Single-gamma interface.
inline Corrector solve_cell(const PeriodicTensor& t, int gamma, int K, const CellOptions& opts = {}) {
    if (gamma < 1 || gamma > t.dim()) throw std::invalid_argument("solve_cell: gamma out of range");
    return solve_cell_all(t, K, opts).per_gamma[gamma - 1];
}

/// Effective (homogenized) constant tensor.
struct HomogenizedTensor {
    int d = 0, N = 0;
    std::vector<Eigen::MatrixXd> blocks; // d*d of N x N, row-major (a,b)
    double lambda0 = 0, Lambda0 = 0;     // ellipticity certificate

    const Eigen::MatrixXd& at(int a, int b) const { return blocks[size_t(a) * d + b]; }
    Eigen::MatrixXd& at(int a, int b) { return blocks[size_t(a) * d + b]; }

    /// d x d matrix (A^0_{kj})_{ab} for fixed system indices (k, j).
    Eigen::MatrixXd spatial(int k, int j) const {
        Eigen::MatrixXd m(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) m(a, b) = at(a, b)(k, j);
        return m;
    }

    static HomogenizedTensor from_constant(const PeriodicTensor& t) {
        HomogenizedTensor h;
        h.d = t.dim(); h.N = t.sys();
        h.blocks.assign(size_t(h.d) * h.d, Eigen::MatrixXd::Zero(h.N, h.N));
        Freq zero(h.d, 0);
        for (int a = 0; a < h.d; ++a)
            for (int b = 0; b < h.d; ++b) h.at(a, b) = t.coeff(zero, a, b).real();
        h.certify();
        return h;
    }

    void certify() {
        Eigen::MatrixXd Q(d * N, d * N);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j) Q(a * N + i, b * N + j) = at(a, b)(i, j);
        Eigen::MatrixXd S = 0.5 * (Q + Q.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        lambda0 = es.eigenvalues().minCoeff();
        Lambda0 = es.eigenvalues().maxCoeff();
    }
};

/// Cell-average formula A^0_{ab,ij} = c_0(A^{ab}_{ij}) + c_0(A^{ag}_{ik} d_g (chi^b)_{kj})
/// with the correctors of the non-adjoint problem.
inline HomogenizedTensor homogenized_tensor(const PeriodicTensor& t, const CorrectorSet& set) {
    const int d = t.dim(), N = t.sys();
    if ((int)set.per_gamma.size() != d)
        throw std::invalid_argument("homogenized_tensor: corrector set size mismatch");
    for (const auto& c : set.per_gamma)
        if (c.chi.dim() != d || c.chi.rows() != N || c.chi.cols() != N)
            throw std::invalid_argument("homogenized_tensor: corrector shape mismatch");

    HomogenizedTensor h;
    h.d = d; h.N = N;
    h.blocks.assign(size_t(d) * d, Eigen::MatrixXd::Zero(N, N));
    Freq zero(d, 0);
    double imag_max = 0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            Eigen::MatrixXcd acc = t.coeff(zero, a, b);
            // c_0 of the product A^{ag} d_g chi^b: convolution at frequency 0
            const auto& chi = set.per_gamma[b].chi;
            for (const auto& [eta, X] : chi.coeffs()) {
                const TensorBlock* blk = t.block(negate(eta));
                if (!blk) continue;
                for (int g = 0; g < d; ++g)
                    acc += blk->at(a, g) * ((two_pi_i * double(eta[g])) * X);
            }
            imag_max = std::max(imag_max, acc.imag().cwiseAbs().maxCoeff());
            h.at(a, b) = acc.real();
        }
    if (imag_max > 1e-9)
        throw solver_error("homogenized_tensor: non-real average, " + std::to_string(imag_max));
    h.certify();
    return h;
}

} // namespace bltail
