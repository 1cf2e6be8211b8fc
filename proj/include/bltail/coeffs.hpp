#pragma once

#include "bltail/base.hpp"

#include <numeric>
#include <random>

namespace bltail {

/// One Fourier coefficient of a coefficient tensor: the d x d grid of
/// N x N blocks c_xi(A^{ab}_{ij}), stored row-major in (a,b).
class TensorBlock {
public:
    TensorBlock() = default;
    TensorBlock(int d, int N) : d_(d) {
        blocks_.resize(size_t(d) * d, Eigen::MatrixXcd::Zero(N, N));
    }

    Eigen::MatrixXcd& at(int a, int b) { return blocks_[size_t(a) * d_ + b]; }
    const Eigen::MatrixXcd& at(int a, int b) const { return blocks_[size_t(a) * d_ + b]; }
    int dim() const { return d_; }
    int sys() const { return blocks_.empty() ? 0 : (int)blocks_[0].rows(); }

    double norm() const {
        double s = 0;
        for (const auto& m : blocks_) s += m.squaredNorm();
        return std::sqrt(s);
    }
    TensorBlock conjugate() const {
        TensorBlock r = *this;
        for (auto& m : r.blocks_) m = m.conjugate();
        return r;
    }

private:
    int d_ = 0;
    std::vector<Eigen::MatrixXcd> blocks_;
};

/// Coefficient tensor A (or A*) as a truncated Fourier series over Z^d.
/// Real-valuedness on the torus is encoded by the Hermitian symmetry
/// c_{-xi} = conj(c_xi), which set_block maintains automatically.
class PeriodicTensor {
public:
    PeriodicTensor(int d, int N) : d_(d), N_(N) {
        if (d < 2 || N < 1) throw std::invalid_argument("PeriodicTensor: need d >= 2, N >= 1");
    }

    int dim() const { return d_; }
    int sys() const { return N_; }
    int cutoff() const { return cutoff_; }
    double lambda() const { return lambda_; }
    double big_lambda() const { return Lambda_; }
    void set_ellipticity(double lam, double Lam) { lambda_ = lam; Lambda_ = Lam; }

    const std::map<Freq, TensorBlock>& coeffs() const { return coeffs_; }

    /// Insert c_xi and its conjugate mirror at -xi.
    void set_block(const Freq& xi, const TensorBlock& c) {
        if ((int)xi.size() != d_) throw std::invalid_argument("frequency dimension mismatch");
        coeffs_[xi] = c;
        if (!is_zero(xi)) coeffs_[negate(xi)] = c.conjugate();
        cutoff_ = std::max(cutoff_, linf_norm(xi));
    }

    const TensorBlock* block(const Freq& xi) const {
        auto it = coeffs_.find(xi);
        return it == coeffs_.end() ? nullptr : &it->second;
    }

    /// N x N block of the coefficient at xi for spatial indices (a,b);
    /// zero if the frequency is not stored.
    Eigen::MatrixXcd coeff(const Freq& xi, int a, int b) const {
        if (const TensorBlock* c = block(xi)) return c->at(a, b);
        return Eigen::MatrixXcd::Zero(N_, N_);
    }

    /// Check the Hermitian pairing; the zero frequency must be real.
    void validate() const {
        for (const auto& [xi, c] : coeffs_) {
            auto it = coeffs_.find(negate(xi));
            if (it == coeffs_.end())
                throw validation_error("tensor: missing conjugate pair for a stored frequency");
            TensorBlock diff = it->second;
            double err = 0;
            for (int a = 0; a < d_; ++a)
                for (int b = 0; b < d_; ++b)
                    err = std::max(err, (diff.at(a, b) - c.at(a, b).conjugate()).cwiseAbs().maxCoeff());
            if (err > 1e-12)
                throw validation_error("tensor: conjugate pair mismatch, " + std::to_string(err));
        }
    }

    /// Pointwise evaluation of the series; by Hermitian symmetry the result
    /// is real and is returned with the imaginary part dropped.
    TensorBlock evaluate(const Eigen::VectorXd& y) const {
        TensorBlock sum(d_, N_);
        for (const auto& [xi, c] : coeffs_) {
            Complex e = phase(xi, y);
            for (int a = 0; a < d_; ++a)
                for (int b = 0; b < d_; ++b)
                    sum.at(a, b) += e * c.at(a, b);
        }
        return sum;
    }

    /// The (d N) x (d N) quadratic-form matrix Q[(a,i),(b,j)] = A^{ab}_{ij}(y).
    Eigen::MatrixXd quadratic_form(const Eigen::VectorXd& y) const {
        TensorBlock v = evaluate(y);
        Eigen::MatrixXd Q(d_ * N_, d_ * N_);
        for (int a = 0; a < d_; ++a)
            for (int b = 0; b < d_; ++b)
                for (int i = 0; i < N_; ++i)
                    for (int j = 0; j < N_; ++j)
                        Q(a * N_ + i, b * N_ + j) = v.at(a, b)(i, j).real();
        return Q;
    }

    /// Constant tensor from one block grid.
    static PeriodicTensor constant(int d, int N, const TensorBlock& c0) {
        PeriodicTensor t(d, N);
        t.set_block(Freq(d, 0), c0);
        return t;
    }

    /// Scalar isotropic tensor a(y) I: A^{ab} = delta_ab a(y) I_N, with the
    /// scalar profile given by its Fourier coefficients.
    static PeriodicTensor isotropic(int d, int N, const std::map<Freq, Complex>& profile) {
        PeriodicTensor t(d, N);
        for (const auto& [xi, v] : profile) {
            TensorBlock c(d, N);
            for (int a = 0; a < d; ++a) c.at(a, a) = v * Eigen::MatrixXcd::Identity(N, N);
            t.set_block(xi, c);
        }
        return t;
    }

private:
    int d_, N_;
    int cutoff_ = 0;
    double lambda_ = 0, Lambda_ = 0;
    std::map<Freq, TensorBlock> coeffs_;
};

/// Z^d-periodic field with N x M matrix values (M = 1 for vector data,
/// M = N for corrector-type data), as a truncated Fourier series.
class PeriodicField {
public:
    PeriodicField(int d, int rows, int cols) : d_(d), rows_(rows), cols_(cols) {}

    int dim() const { return d_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int cutoff() const { return cutoff_; }
    const std::map<Freq, Eigen::MatrixXcd>& coeffs() const { return coeffs_; }

    void set_coeff(const Freq& xi, const Eigen::MatrixXcd& v) {
        if ((int)xi.size() != d_) throw std::invalid_argument("frequency dimension mismatch");
        if (v.rows() != rows_ || v.cols() != cols_) throw std::invalid_argument("value shape mismatch");
        coeffs_[xi] = v;
        if (!is_zero(xi)) coeffs_[negate(xi)] = v.conjugate();
        cutoff_ = std::max(cutoff_, linf_norm(xi));
    }

    /// Add to a coefficient (keeps the conjugate mirror in sync).
    void add_coeff(const Freq& xi, const Eigen::MatrixXcd& v) {
        Eigen::MatrixXcd cur = coeff(xi);
        set_coeff(xi, cur + v);
    }

    /// Insert a coefficient without the Hermitian mirror, for genuinely
    /// complex-valued fields (modulated factors, shifted spectra).
    void set_coeff_raw(const Freq& xi, const Eigen::MatrixXcd& v) {
        if ((int)xi.size() != d_) throw std::invalid_argument("frequency dimension mismatch");
        if (v.rows() != rows_ || v.cols() != cols_) throw std::invalid_argument("value shape mismatch");
        coeffs_[xi] = v;
        cutoff_ = std::max(cutoff_, linf_norm(xi));
    }

    Eigen::MatrixXcd coeff(const Freq& xi) const {
        auto it = coeffs_.find(xi);
        return it == coeffs_.end() ? Eigen::MatrixXcd::Zero(rows_, cols_) : it->second;
    }

    Eigen::MatrixXcd evaluate(const Eigen::VectorXd& y) const {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(rows_, cols_);
        for (const auto& [xi, v] : coeffs_) s += phase(xi, y) * v;
        return s;
    }

    double max_coeff_norm() const {
        double m = 0;
        for (const auto& [xi, v] : coeffs_) m = std::max(m, v.cwiseAbs().maxCoeff());
        return m;
    }

    /// Estimate of the sup norm by dense sampling of the unit cell.
    double sup_norm(int per_axis = 17) const {
        double m = 0;
        Eigen::VectorXd y(d_);
        std::vector<int> idx(d_, 0);
        while (true) {
            for (int k = 0; k < d_; ++k) y[k] = double(idx[k]) / per_axis;
            m = std::max(m, evaluate(y).cwiseAbs().maxCoeff());
            int k = d_ - 1;
            while (k >= 0 && idx[k] == per_axis - 1) idx[k--] = 0;
            if (k < 0) break;
            ++idx[k];
        }
        return m;
    }

    void validate() const {
        for (const auto& [xi, v] : coeffs_) {
            auto it = coeffs_.find(negate(xi));
            if (it == coeffs_.end())
                throw validation_error("field: missing conjugate pair for a stored frequency");
            if ((it->second - v.conjugate()).cwiseAbs().maxCoeff() > 1e-12)
                throw validation_error("field: conjugate pair mismatch");
        }
    }

private:
    int d_, rows_, cols_;
    int cutoff_ = 0;
    std::map<Freq, Eigen::MatrixXcd> coeffs_;
};

// ── operations ────────────────────────────────────────────────────────────

struct EllipticityReport {
    double lambda_est = 0;
    double Lambda_est = 0;
    bool pass = false;
};

/// Sample the Rayleigh quotient of the tensor over a deterministic lattice of
/// points and random test matrices. The eigen-range of the symmetrized
/// quadratic form at each sample point gives the exact per-point extremes; the
/// random matrices cross-check the assembled form.
inline EllipticityReport check_ellipticity(const PeriodicTensor& t, int samples) {
    if (samples < 1) throw std::invalid_argument("check_ellipticity: samples >= 1");
    t.validate();
    const int d = t.dim(), N = t.sys();
    int per_axis = std::max(2, (int)std::ceil(std::pow(double(samples), 1.0 / d)));

    EllipticityReport rep;
    rep.lambda_est = std::numeric_limits<double>::infinity();
    rep.Lambda_est = -std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(0xb17a11);
    std::normal_distribution<double> gauss;

    Eigen::VectorXd y(d);
    std::vector<int> idx(d, 0);
    while (true) {
        for (int k = 0; k < d; ++k) y[k] = double(idx[k]) / per_axis;
        Eigen::MatrixXd Q = t.quadratic_form(y);
        Eigen::MatrixXd S = 0.5 * (Q + Q.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        rep.lambda_est = std::min(rep.lambda_est, es.eigenvalues().minCoeff());
        rep.Lambda_est = std::max(rep.Lambda_est, es.eigenvalues().maxCoeff());
        // a couple of random test matrices as an independent probe
        for (int r = 0; r < 2; ++r) {
            Eigen::VectorXd v(d * N);
            for (int k = 0; k < d * N; ++k) v[k] = gauss(rng);
            v.normalize();
            double q = v.dot(Q * v);
            rep.lambda_est = std::min(rep.lambda_est, q);
            rep.Lambda_est = std::max(rep.Lambda_est, q);
        }
        int k = d - 1;
        while (k >= 0 && idx[k] == per_axis - 1) idx[k--] = 0;
        if (k < 0) break;
        ++idx[k];
    }
    rep.pass = rep.lambda_est > 1e-12;
    return rep;
}

/// Layered-medium test (A5): every stored frequency with a nonzero
/// coefficient must satisfy xi . nu0 = 0 exactly.
inline bool check_layered(const PeriodicTensor& t, const std::vector<long long>& nu0) {
    bool all_zero = true;
    for (long long c : nu0) if (c != 0) all_zero = false;
    if (all_zero || nu0.size() != (size_t)t.dim())
        throw std::invalid_argument("check_layered: nu0 must be a nonzero integer d-vector");
    for (const auto& [xi, c] : t.coeffs()) {
        if (c.norm() <= 1e-14) continue;
        if (idot(xi, nu0) != 0) return false;
    }
    return true;
}

inline bool check_layered(const PeriodicField& f, const std::vector<long long>& nu0) {
    bool all_zero = true;
    for (long long c : nu0) if (c != 0) all_zero = false;
    if (all_zero || nu0.size() != (size_t)f.dim())
        throw std::invalid_argument("check_layered: nu0 must be a nonzero integer d-vector");
    for (const auto& [xi, v] : f.coeffs()) {
        if (v.cwiseAbs().maxCoeff() <= 1e-14) continue;
        if (idot(xi, nu0) != 0) return false;
    }
    return true;
}

/// Adjoint tensor (A*)^{ab}_{ij} = A^{ba}_{ji}, frequency-wise.
inline PeriodicTensor adjoint_tensor(const PeriodicTensor& t) {
    t.validate();
    PeriodicTensor r(t.dim(), t.sys());
    r.set_ellipticity(t.lambda(), t.big_lambda());
    for (const auto& [xi, c] : t.coeffs()) {
        TensorBlock s(t.dim(), t.sys());
        for (int a = 0; a < t.dim(); ++a)
            for (int b = 0; b < t.dim(); ++b)
                s.at(a, b) = c.at(b, a).transpose();
        r.set_block(xi, s);
    }
    return r;
}

/// Row divergence test: sum_a xi_a c_xi(A^{ga}_{ki}) = 0 for all g, k, i, xi.
/// This is the Fourier form of div(v^g_{k,i}) = 0.
inline bool divfree_check(const PeriodicTensor& t) {
    const int d = t.dim(), N = t.sys();
    for (const auto& [xi, c] : t.coeffs()) {
        for (int g = 0; g < d; ++g) {
            Eigen::MatrixXcd div = Eigen::MatrixXcd::Zero(N, N);
            for (int a = 0; a < d; ++a) div += double(xi[a]) * c.at(g, a);
            if (div.cwiseAbs().maxCoeff() > 1e-14) return false;
        }
    }
    return true;
}

} // namespace bltail
