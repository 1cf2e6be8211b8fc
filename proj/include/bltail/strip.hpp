#pragma once

#include "bltail/cell.hpp"
#include "bltail/lattice.hpp"

#include <optional>

namespace bltail {

struct StripOptions {
    int tangential_modes = 16;    // cutoff Kt per tangential axis
    double depth_step = 1.0 / 64;
    double depth = 0;             // truncation L; 0 = pick from tau and tolerance
    double max_depth = 200;       // cap for the auto choice
    double truncation_tol = 1e-8;
    bool estimate_refinement = false; // re-solve at 2h and report the tail shift
    double grad_tol = 1e-6;       // top-slab gradient threshold for extract_tail
};

/// Boundary-layer problem on the periodic strip Y' x [0, L] after the
/// T0-then-shear reduction: coefficients depend on the tangential variables
/// only, Dirichlet data at depth 0, conormal-zero at the truncation depth.
struct StripProblem {
    int d = 0, N = 0, M = 0;                   // M = data columns
    PeriodicTensor coeffs{2, 1};               // frequencies have zero last component
    std::map<Freq, Eigen::MatrixXcd> data;     // tangential freq (d-1 ints) -> N x M
    double tau = 0;             // guaranteed decay rate (Tartar/Lions)
    double delta = 1;           // n . nu0 for reduced problems, 1 for direct ones
    double lambda_orig = 0, normA_orig = 0;    // ellipticity data of the original tensor
    double lambda_strip = 0, normA_strip = 0;  // measured on the strip tensor
    std::optional<ShearFrame> frame;           // present for reduced problems

    double data_norm() const {
        double s = 0;
        for (const auto& [xi, v] : data) s += v.cwiseAbs().sum();
        return s;
    }
};

/// tau = lambda_A delta^4 / (4 ||A||_inf), the guaranteed exponential rate
/// for layered media at layering angle >= delta.
inline double select_decay_rate(const StripProblem& p, double delta) {
    if (delta <= 0) throw std::invalid_argument("select_decay_rate: delta must be positive");
    if (p.lambda_orig <= 0 || p.normA_orig <= 0)
        throw std::invalid_argument("select_decay_rate: ellipticity data missing");
    return p.lambda_orig * std::pow(delta, 4) / (4.0 * p.normA_orig);
}

struct StripSolution {
    int d = 0, N = 0, M = 0;
    double h = 0, L = 0;
    int steps = 0;                      // depth points are t_k = k h, k = 0..steps
    std::vector<Freq> modes;            // tangential multi-indices, (d-1) ints
    std::vector<std::vector<Eigen::MatrixXcd>> profiles; // [mode][k] = N x M
    std::map<Freq, Eigen::MatrixXcd> data;               // boundary data copy
    double residual = 0;
    double boundary_trace_err = 0;
    std::vector<double> grad_sup;       // ||grad w(., t_k)||_inf
    double grad_top = 0;                // sup over the top slab [L-1, L]
    double decay_slope = 0;             // fitted slope of log grad_sup
    double decay_intercept = 0;
    double tau = 0;
    double tail_err_bound = 0;          // C_emp e^{-tau (L-1)}
    double refine_err_est = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXcd tail;              // slab average of the mean profile

    int mode_index(const Freq& xi) const {
        auto it = std::find(modes.begin(), modes.end(), xi);
        return it == modes.end() ? -1 : int(it - modes.begin());
    }
    const Eigen::MatrixXcd& profile(const Freq& xi, int k) const {
        int i = mode_index(xi);
        if (i < 0) throw std::invalid_argument("profile: mode outside cutoff");
        return profiles[i][k];
    }
    /// One-sided third-order depth derivative of a profile at t = 0.
    Eigen::MatrixXcd profile_dt0(int mode) const {
        return (-11.0 * profiles[mode][0] + 18.0 * profiles[mode][1] -
                9.0 * profiles[mode][2] + 2.0 * profiles[mode][3]) / (6.0 * h);
    }
};

namespace detail {

struct StripOperator {
    int B = 0;                       // block dimension = n_modes * N
    Eigen::MatrixXcd D, R, S0, S2t;  // depth-depth, first-order, tangential, conormal-tangential
};

/// Mode-coupling blocks of the depth-independent operator. With
/// w = sum_xi c_xi(t) e^{2 pi i xi . z'} the system becomes
/// -D c'' + R c' + S0 c = 0, conormal at the top: S2t c + D c' = 0.
inline StripOperator build_operator(const StripProblem& p, const std::vector<Freq>& modes) {
    const int d = p.d, N = p.N;
    const int nm = (int)modes.size();
    StripOperator op;
    op.B = nm * N;
    op.D = Eigen::MatrixXcd::Zero(op.B, op.B);
    op.R = Eigen::MatrixXcd::Zero(op.B, op.B);
    op.S0 = Eigen::MatrixXcd::Zero(op.B, op.B);
    op.S2t = Eigen::MatrixXcd::Zero(op.B, op.B);

    for (int ir = 0; ir < nm; ++ir) {
        for (int jc = 0; jc < nm; ++jc) {
            Freq zeta(d, 0);
            for (int k = 0; k + 1 < d; ++k) zeta[k] = modes[ir][k] - modes[jc][k];
            const TensorBlock* c = p.coeffs.block(zeta);
            if (!c) continue;
            Eigen::MatrixXcd s0 = Eigen::MatrixXcd::Zero(N, N);
            Eigen::MatrixXcd s1 = Eigen::MatrixXcd::Zero(N, N);
            Eigen::MatrixXcd s2 = Eigen::MatrixXcd::Zero(N, N);
            for (int a = 0; a + 1 < d; ++a) {
                for (int b = 0; b + 1 < d; ++b)
                    s0 += (4.0 * pi * pi * modes[ir][a] * modes[jc][b]) * c->at(a, b);
                s1 += (-two_pi_i * double(modes[ir][a])) * c->at(a, d - 1);
            }
            for (int b = 0; b + 1 < d; ++b)
                s2 += (two_pi_i * double(modes[jc][b])) * c->at(d - 1, b);
            op.S0.block(ir * N, jc * N, N, N) = s0;
            op.R.block(ir * N, jc * N, N, N) = s1 - s2;
            op.S2t.block(ir * N, jc * N, N, N) = s2;
            op.D.block(ir * N, jc * N, N, N) = c->at(d - 1, d - 1);
        }
    }
    return op;
}

} // namespace detail

/// Solve the truncated strip problem with second-order finite differences in
/// depth and spectral tangential coupling (block-tridiagonal elimination).
inline StripSolution solve_strip(const StripProblem& p, const StripOptions& opts = {}) {
    const int d = p.d, N = p.N, M = p.M;
    const int Kt = opts.tangential_modes;

    StripSolution sol;
    sol.d = d; sol.N = N; sol.M = M;
    sol.tau = p.tau;
    sol.data = p.data;

    // depth truncation
    double L = opts.depth;
    if (L <= 0 && p.tau > 0)
        L = std::min(opts.max_depth, std::max(5.0, std::ceil(std::log(1.0 / opts.truncation_tol) / p.tau) + 2.0));
    if (L <= 0) L = 5.0;
    double h = opts.depth_step;
    int steps = std::max(8, (int)std::llround(L / h));
    L = steps * h;
    sol.h = h; sol.L = L; sol.steps = steps;

    // tangential modes
    sol.modes = freq_box(d - 1, Kt);
    const int nm = (int)sol.modes.size();
    for (const auto& [xi, v] : p.data)
        if (linf_norm(xi) > Kt)
            throw std::invalid_argument("solve_strip: boundary data mode outside tangential cutoff");

    detail::StripOperator op = detail::build_operator(p, sol.modes);
    const int B = op.B;
    const double h2 = h * h;

    Eigen::MatrixXcd A_lo = -op.D / h2 - op.R / (2 * h);
    Eigen::MatrixXcd A_di = 2.0 * op.D / h2 + op.S0;
    Eigen::MatrixXcd A_up = -op.D / h2 + op.R / (2 * h);

    // ghost-node elimination of the conormal-zero condition at the top
    Eigen::PartialPivLU<Eigen::MatrixXcd> Dlu(op.D);
    Eigen::MatrixXcd top_lo = A_lo + A_up;
    Eigen::MatrixXcd top_di = A_di - 2.0 * h * (A_up * Dlu.solve(op.S2t));

    // Dirichlet data vector
    Eigen::MatrixXcd W0 = Eigen::MatrixXcd::Zero(B, M);
    for (const auto& [xi, v] : p.data) {
        int idx = int(std::find(sol.modes.begin(), sol.modes.end(), xi) - sol.modes.begin());
        W0.middleRows(idx * N, N) = v;
    }

    // forward elimination; the diagonal factors converge geometrically for a
    // depth-independent operator, after which one LU is reused
    std::vector<Eigen::MatrixXcd> G(steps + 1);
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lus;
    std::vector<int> lu_of(steps + 1, -1);
    lus.reserve(512);
    Eigen::MatrixXcd Dk = A_di;
    bool frozen = false;
    Eigen::MatrixXcd F; // A_lo D^{-1} once frozen
    G[1] = -A_lo * W0;
    lus.emplace_back(Dk);
    lu_of[1] = 0;
    for (int k = 2; k <= steps; ++k) {
        const Eigen::MatrixXcd& lower = (k == steps) ? top_lo : A_lo;
        if (!frozen) {
            Eigen::MatrixXcd DinvAup = lus.back().solve(A_up);
            Eigen::MatrixXcd Dnext = ((k == steps) ? top_di : A_di) - lower * DinvAup;
            G[k] = -lower * lus.back().solve(G[k - 1]);
            if (k < steps && (Dnext - Dk).norm() <= 1e-14 * Dnext.norm()) {
                frozen = true;
                F = A_lo * Eigen::PartialPivLU<Eigen::MatrixXcd>(Dnext).solve(Eigen::MatrixXcd::Identity(B, B));
            }
            Dk = Dnext;
            lus.emplace_back(Dk);
            lu_of[k] = (int)lus.size() - 1;
        } else if (k < steps) {
            G[k] = -F * G[k - 1];
            lu_of[k] = (int)lus.size() - 1;
        } else {
            // top row against the converged factor
            Eigen::MatrixXcd DinvAup = lus.back().solve(A_up);
            Eigen::MatrixXcd Dtop = top_di - top_lo * DinvAup;
            G[k] = -top_lo * lus.back().solve(G[k - 1]);
            lus.emplace_back(Dtop);
            lu_of[k] = (int)lus.size() - 1;
        }
    }

    // back substitution
    std::vector<Eigen::MatrixXcd> W(steps + 1);
    W[0] = W0;
    W[steps] = lus[lu_of[steps]].solve(G[steps]);
    for (int k = steps - 1; k >= 1; --k)
        W[k] = lus[lu_of[k]].solve(G[k] - A_up * W[k + 1]);

    // residual of the discrete system, relative to the operator scale
    double opscale = A_lo.norm() + A_di.norm() + A_up.norm();
    double wscale = W0.norm();
    for (int k = 1; k <= steps; ++k) wscale = std::max(wscale, W[k].norm());
    double scale = std::max(1e-300, opscale * std::max(wscale, 1.0));
    double res = 0;
    for (int k = 1; k <= steps; ++k) {
        Eigen::MatrixXcd r;
        if (k < steps)
            r = A_lo * W[k - 1] + A_di * W[k] + A_up * W[k + 1];
        else
            r = top_lo * W[k - 1] + top_di * W[k];
        res = std::max(res, r.norm() / scale);
    }
    sol.residual = res;
    if (res > 1e-10)
        throw solver_error("solve_strip: discrete residual " + std::to_string(res));

    // unpack profiles
    sol.profiles.assign(nm, std::vector<Eigen::MatrixXcd>(steps + 1));
    for (int i = 0; i < nm; ++i)
        for (int k = 0; k <= steps; ++k) sol.profiles[i][k] = W[k].middleRows(i * N, N);

    // exact boundary trace (c_xi(n; 0) = c_xi(data))
    double trace_err = 0;
    for (int i = 0; i < nm; ++i) {
        auto it = p.data.find(sol.modes[i]);
        Eigen::MatrixXcd want = (it != p.data.end()) ? it->second : Eigen::MatrixXcd::Zero(N, M);
        trace_err = std::max(trace_err, (sol.profiles[i][0] - want).cwiseAbs().maxCoeff());
    }
    sol.boundary_trace_err = trace_err;

    // sup of the gradient per layer, on a tangential sample grid
    int P = std::max(16, 4 * (2 * Kt + 1));
    if (d >= 3) P = std::min(P, 48);
    std::vector<Eigen::VectorXd> gpts;
    {
        std::vector<int> ix(d - 1, 0);
        while (true) {
            Eigen::VectorXd z(d - 1);
            for (int k = 0; k < d - 1; ++k) z[k] = double(ix[k]) / P;
            gpts.push_back(z);
            int k = d - 2;
            while (k >= 0 && ix[k] == P - 1) ix[k--] = 0;
            if (k < 0) break;
            ++ix[k];
        }
    }
    std::vector<std::vector<Complex>> ph(gpts.size(), std::vector<Complex>(nm));
    for (size_t pidx = 0; pidx < gpts.size(); ++pidx)
        for (int i = 0; i < nm; ++i) {
            double s = 0;
            for (int q = 0; q < d - 1; ++q) s += sol.modes[i][q] * gpts[pidx][q];
            ph[pidx][i] = std::exp(two_pi_i * s);
        }
    // depth-derivative profiles (central, one-sided at the ends)
    std::vector<std::vector<Eigen::MatrixXcd>> dprof(nm, std::vector<Eigen::MatrixXcd>(steps + 1));
    for (int i = 0; i < nm; ++i) {
        dprof[i][0] = (sol.profiles[i][1] - sol.profiles[i][0]) / h;
        dprof[i][steps] = (sol.profiles[i][steps] - sol.profiles[i][steps - 1]) / h;
        for (int k = 1; k < steps; ++k)
            dprof[i][k] = (sol.profiles[i][k + 1] - sol.profiles[i][k - 1]) / (2 * h);
    }
    sol.grad_sup.assign(steps + 1, 0.0);
    for (int k = 0; k <= steps; ++k) {
        double layer_max = 0;
        for (size_t pidx = 0; pidx < gpts.size(); ++pidx) {
            const auto& phase_row = ph[pidx];
            for (int r = 0; r < N; ++r)
                for (int c = 0; c < M; ++c) {
                    for (int a = 0; a + 1 < d; ++a) {
                        Complex gval = 0;
                        for (int i = 0; i < nm; ++i)
                            gval += double(sol.modes[i][a]) * sol.profiles[i][k](r, c) * phase_row[i];
                        layer_max = std::max(layer_max, 2 * pi * std::abs(gval));
                    }
                    Complex dt = 0;
                    for (int i = 0; i < nm; ++i) dt += dprof[i][k](r, c) * phase_row[i];
                    layer_max = std::max(layer_max, std::abs(dt));
                }
        }
        sol.grad_sup[k] = layer_max;
    }

    // decay fit on the middle window, and the measured constant for the
    // guaranteed-rate error bound
    {
        int k0 = (int)(0.25 * steps), k1 = (int)(0.75 * steps);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (int k = k0; k <= k1; ++k) {
            if (sol.grad_sup[k] <= 0) continue;
            double x = k * h, y = std::log(sol.grad_sup[k]);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++cnt;
        }
        if (cnt >= 2 && sxx * cnt - sx * sx > 0) {
            sol.decay_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
            sol.decay_intercept = (sy - sol.decay_slope * sx) / cnt;
        }
        double c_emp = 0;
        for (int k = 0; k <= steps; ++k)
            c_emp = std::max(c_emp, sol.grad_sup[k] * std::exp(p.tau * k * h));
        sol.tail_err_bound = c_emp * std::exp(-p.tau * (L - 1.0));
    }
    int top0 = std::max(0, steps - (int)std::llround(1.0 / h));
    for (int k = top0; k <= steps; ++k) sol.grad_top = std::max(sol.grad_top, sol.grad_sup[k]);

    // tail: slab average of the zero-mode profile over [L-1, L]
    {
        int i0 = sol.mode_index(Freq(d - 1, 0));
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(N, M);
        double wsum = 0;
        for (int k = top0; k <= steps; ++k) {
            double w = (k == top0 || k == steps) ? 0.5 : 1.0;
            acc += w * sol.profiles[i0][k];
            wsum += w;
        }
        sol.tail = acc / wsum;
    }

    if (opts.estimate_refinement) {
        StripOptions coarse = opts;
        coarse.estimate_refinement = false;
        coarse.depth_step = 2 * h;
        coarse.depth = L;
        StripSolution s2 = solve_strip(p, coarse);
        sol.refine_err_est = (sol.tail - s2.tail).cwiseAbs().maxCoeff();
    }
    return sol;
}

struct TailExtract {
    Eigen::MatrixXcd value;  // N x M
    double err_bound = 0;    // C_emp e^{-tau (L-1)}
    double grad_top = 0;
};

/// Read off the boundary-layer tail. Refuses when the top slab has not
/// decayed below the threshold ("increase L").
inline TailExtract extract_tail(const StripSolution& sol, double grad_tol) {
    if (sol.grad_top > grad_tol)
        throw convergence_error("extract_tail: top-layer gradient " + std::to_string(sol.grad_top) +
                                " above threshold; increase L");
    return {sol.tail, sol.tail_err_bound, sol.grad_top};
}

/// Reduce a boundary-layer problem over a layered medium to the periodic
/// strip: change variables by T0 (integer, unimodular), then by the shear of
/// m = T0^t n. Both the coefficients and the data must be layered in nu0.
inline StripProblem reduce_to_strip(const PeriodicTensor& t, const PeriodicField& v0,
                                    const Eigen::VectorXd& n, const std::vector<long long>& nu0,
                                    const Params& params = {}) {
    if (!check_layered(t, nu0))
        throw validation_error("reduce_to_strip: tensor is not layered in nu0");
    if (!check_layered(v0, nu0))
        throw validation_error("reduce_to_strip: boundary data is not layered in nu0");

    ShearFrame frame = make_shear_frame(n, nu0, params);
    const int d = t.dim();

    PeriodicTensor t_lam = t;
    if (t_lam.lambda() <= 0) {
        EllipticityReport rep = check_ellipticity(t_lam, 256);
        if (!rep.pass) throw validation_error("reduce_to_strip: tensor is not elliptic");
        t_lam.set_ellipticity(rep.lambda_est, rep.Lambda_est);
    }

    TransformResult step1 = transform_tensor(t_lam, frame.T0_double());
    TransformResult step2 = transform_tensor(step1.tensor, frame.Tn);
    for (const auto& [xi, c] : step2.tensor.coeffs())
        if (xi[d - 1] != 0 && c.norm() > 1e-12)
            throw solver_error("reduce_to_strip: strip coefficients depend on depth");

    StripProblem p;
    p.d = d;
    p.N = t.sys();
    p.M = v0.cols();
    p.coeffs = step2.tensor;
    p.delta = frame.dir.layer_angle;
    p.lambda_orig = t_lam.lambda();
    p.normA_orig = t_lam.big_lambda();

    EllipticityReport strip_rep = check_ellipticity(p.coeffs, 256);
    p.lambda_strip = strip_rep.lambda_est;
    p.normA_strip = strip_rep.Lambda_est;

    // data: tangential coefficient at T0^t xi for every layered mode xi
    for (const auto& [xi, v] : v0.coeffs()) {
        Freq eta = frame.drop_frequency(xi);
        if (eta[d - 1] != 0)
            throw solver_error("reduce_to_strip: data frequency left the tangential lattice");
        Freq etap(eta.begin(), eta.end() - 1);
        p.data[etap] = v;
    }

    // the delta^4 formula can land above the admissible range of the
    // exponential-decay theorem once T0 and the shear have rescaled the
    // coercivity, so clamp against the measured strip constants
    p.tau = std::min(select_decay_rate(p, frame.dir.layer_angle),
                     0.5 * p.lambda_strip / (2.0 * p.normA_strip));
    p.frame = frame;
    return p;
}

/// Direct strip problem from an already depth-independent tensor (used for
/// analytic test cases; delta = 1).
inline StripProblem direct_strip_problem(const PeriodicTensor& t,
                                         const std::map<Freq, Eigen::MatrixXcd>& data,
                                         int M = 1) {
    const int d = t.dim();
    for (const auto& [xi, c] : t.coeffs())
        if (xi[d - 1] != 0 && c.norm() > 1e-14)
            throw validation_error("direct_strip_problem: tensor depends on depth");
    StripProblem p;
    p.d = d;
    p.N = t.sys();
    p.M = M;
    p.coeffs = t;
    if (p.coeffs.lambda() <= 0) {
        EllipticityReport rep = check_ellipticity(p.coeffs, 256);
        p.coeffs.set_ellipticity(rep.lambda_est, rep.Lambda_est);
    }
    p.lambda_orig = p.lambda_strip = p.coeffs.lambda();
    p.normA_orig = p.normA_strip = p.coeffs.big_lambda();
    p.data = data;
    p.delta = 1.0;
    p.tau = select_decay_rate(p, 1.0);
    return p;
}

/// Boundary restriction of the corrector solution in original coordinates:
/// v*_g has the expansion sum_eta c_eta(m; y.n / (n.nu0)) e^{2 pi i T0^{-t} eta . y},
/// so its gradient on the hyperplane is a quasi-periodic series driven by the
/// profile values and depth-derivatives at t = 0.
struct CorrectorTrace {
    int gamma = 0;   // 1-based
    int d = 0, N = 0;
    bool trivial = false;               // zero cell data -> corrector vanishes
    ShearFrame frame;
    std::map<Freq, Eigen::MatrixXcd> C0;   // tangential eta' -> c_eta(m; 0)
    std::map<Freq, Eigen::MatrixXcd> Ct0;  // d_t c_eta(m; 0)
    StripSolution solution;

    /// Coefficient of e^{2 pi i T0^{-t} eta . y} in d_beta v*_g restricted to
    /// the boundary (beta is 0-based).
    Eigen::MatrixXcd gradient_coeff(const Freq& etap, int beta) const {
        auto it0 = C0.find(etap);
        auto it1 = Ct0.find(etap);
        Eigen::MatrixXcd c0 = it0 != C0.end() ? it0->second : Eigen::MatrixXcd::Zero(N, N);
        Eigen::MatrixXcd ct = it1 != Ct0.end() ? it1->second : Eigen::MatrixXcd::Zero(N, N);
        Freq eta(etap);
        eta.push_back(0);
        Freq lifted = frame.lift_frequency(eta);
        double nb = frame.dir.n[beta];
        return (nb / frame.dir.layer_angle) * ct + (two_pi_i * double(lifted[beta])) * c0;
    }
};

/// Solve the boundary-layer corrector system (adjoint operator, data
/// -chi^{*,g}) on the strip reduced by the frame of n, and package the
/// boundary Fourier data needed by the tail representation formula.
inline CorrectorTrace solve_corrector(const PeriodicTensor& t, const CorrectorSet& chi_star,
                                      int gamma, const Eigen::VectorXd& n,
                                      const std::vector<long long>& nu0,
                                      const Params& params = {}, const StripOptions& opts = {}) {
    if (gamma < 1 || gamma > t.dim())
        throw std::invalid_argument("solve_corrector: gamma out of range");
    if ((int)chi_star.per_gamma.size() != t.dim())
        throw dependency_error("solve_corrector: corrector set not solved for all gamma");

    const PeriodicField& chi = chi_star.per_gamma[gamma - 1].chi;
    CorrectorTrace tr;
    tr.gamma = gamma;
    tr.d = t.dim();
    tr.N = t.sys();

    if (chi.coeffs().empty() || chi.max_coeff_norm() <= 1e-14) {
        tr.trivial = true;
        tr.frame = make_shear_frame(n, nu0, params);
        return tr;
    }

    // drop corrector modes far below the spectral floor; they would only
    // widen the tangential blocks without moving the result
    double floor = 1e-12 * chi.max_coeff_norm();
    PeriodicField minus_chi(chi.dim(), chi.rows(), chi.cols());
    for (const auto& [xi, v] : chi.coeffs())
        if (v.cwiseAbs().maxCoeff() >= floor) minus_chi.set_coeff_raw(xi, -v);

    StripProblem p = reduce_to_strip(adjoint_tensor(t), minus_chi, n, nu0, params);
    tr.frame = *p.frame;
    StripOptions wide = opts;
    for (const auto& [etap, v] : p.data) {
        (void)v;
        wide.tangential_modes = std::max(wide.tangential_modes, linf_norm(etap));
    }
    tr.solution = solve_strip(p, wide);

    for (int i = 0; i < (int)tr.solution.modes.size(); ++i) {
        const Freq& etap = tr.solution.modes[i];
        Eigen::MatrixXcd c0 = tr.solution.profiles[i][0];
        Eigen::MatrixXcd ct = tr.solution.profile_dt0(i);
        if (c0.cwiseAbs().maxCoeff() > 1e-300 || ct.cwiseAbs().maxCoeff() > 1e-300) {
            tr.C0[etap] = c0;
            tr.Ct0[etap] = ct;
        }
    }
    return tr;
}

} // namespace bltail
