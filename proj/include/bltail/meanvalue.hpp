#pragma once

#include "bltail/coeffs.hpp"
#include "bltail/lattice.hpp"

#include <boost/rational.hpp>

#include <functional>

namespace bltail {

using Rational = boost::rational<long long>;

/// Continued-fraction rationalization with bounded denominator.
inline Rational rationalize(double x, long long max_den) {
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double v = x;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(v);
        if (fl > 9e17 || fl < -9e17) break;
        long long a = (long long)fl;
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = v - fl;
        if (frac < 1e-15) break;
        v = 1.0 / frac;
    }
    return Rational(p1, q1 == 0 ? 1 : q1);
}

/// Small dense matrix of exact rationals (frequency matrices T).
class RationalMatrix {
public:
    RationalMatrix() = default;
    RationalMatrix(int rows, int cols) : r_(rows), c_(cols), a_(size_t(rows) * cols) {}

    int rows() const { return r_; }
    int cols() const { return c_; }
    Rational& operator()(int i, int j) { return a_[size_t(i) * c_ + j]; }
    const Rational& operator()(int i, int j) const { return a_[size_t(i) * c_ + j]; }

    static RationalMatrix identity(int n) {
        RationalMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }
    static RationalMatrix from_integer(const IntMatrix& T) {
        RationalMatrix m((int)T.rows(), (int)T.cols());
        for (int i = 0; i < T.rows(); ++i)
            for (int j = 0; j < T.cols(); ++j) m(i, j) = Rational(T(i, j));
        return m;
    }
    /// Rationalize a floating matrix entrywise (reported by the caller).
    static RationalMatrix from_double(const Eigen::MatrixXd& T, long long max_den) {
        RationalMatrix m((int)T.rows(), (int)T.cols());
        for (int i = 0; i < T.rows(); ++i)
            for (int j = 0; j < T.cols(); ++j) m(i, j) = rationalize(T(i, j), max_den);
        return m;
    }

    std::vector<Rational> apply(const Freq& xi) const {
        std::vector<Rational> out(r_, Rational(0));
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) out[i] += (*this)(i, j) * Rational(xi[j]);
        return out;
    }

    Eigen::MatrixXd to_double() const {
        Eigen::MatrixXd m(r_, c_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j)
                m(i, j) = boost::rational_cast<double>((*this)(i, j));
        return m;
    }

private:
    int r_ = 0, c_ = 0;
    std::vector<Rational> a_;
};

inline bool is_zero_vector(const std::vector<Rational>& v) {
    // note: comparing boost::rational directly against an int literal
    // recurses endlessly in boost 1.74, so test the numerator
    for (const auto& x : v) if (x.numerator() != 0) return false;
    return true;
}

inline bool is_integer_vector(const std::vector<Rational>& v, Freq* out = nullptr) {
    if (out) out->assign(v.size(), 0);
    for (size_t k = 0; k < v.size(); ++k) {
        if (v[k].denominator() != 1) return false;
        if (out) (*out)[k] = (int)v[k].numerator();
    }
    return true;
}

/// f(y) = sum_xi c_xi exp(2 pi i (T xi) . y) with rational frequency matrix T
/// and finitely many matrix-valued coefficients.
class QuasiPeriodicSeries {
public:
    QuasiPeriodicSeries(int d, int rows, int cols, RationalMatrix T)
        : d_(d), rows_(rows), cols_(cols), T_(std::move(T)) {
        if (T_.rows() != d || T_.cols() != d)
            throw std::invalid_argument("QuasiPeriodicSeries: T must be d x d");
    }

    int dim() const { return d_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const RationalMatrix& T() const { return T_; }
    const std::map<Freq, Eigen::MatrixXcd>& coeffs() const { return coeffs_; }

    void set_coeff(const Freq& xi, const Eigen::MatrixXcd& c) {
        if ((int)xi.size() != d_) throw std::invalid_argument("frequency dimension mismatch");
        if (c.rows() != rows_ || c.cols() != cols_) throw std::invalid_argument("value shape mismatch");
        coeffs_[xi] = c;
    }

    Eigen::MatrixXcd coeff(const Freq& xi) const {
        auto it = coeffs_.find(xi);
        return it == coeffs_.end() ? Eigen::MatrixXcd::Zero(rows_, cols_) : it->second;
    }

    Eigen::MatrixXcd evaluate(const Eigen::VectorXd& y) const {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(rows_, cols_);
        Eigen::MatrixXd Td = T_.to_double();
        for (const auto& [xi, c] : coeffs_) {
            double ph = 0;
            for (int i = 0; i < d_; ++i) {
                double Ti = 0;
                for (int j = 0; j < d_; ++j) Ti += Td(i, j) * xi[j];
                ph += Ti * y[i];
            }
            s += std::exp(two_pi_i * ph) * c;
        }
        return s;
    }

    /// Periodic field viewed as a quasi-periodic series with T = I.
    static QuasiPeriodicSeries from_periodic(const PeriodicField& f) {
        QuasiPeriodicSeries q(f.dim(), f.rows(), f.cols(), RationalMatrix::identity(f.dim()));
        for (const auto& [xi, c] : f.coeffs()) q.set_coeff(xi, c);
        return q;
    }

private:
    int d_, rows_, cols_;
    RationalMatrix T_;
    std::map<Freq, Eigen::MatrixXcd> coeffs_;
};

/// Hyperplane mean of f restricted to the hyperplane with irrational normal
/// n: the lattice-sum rule M(h) = sum over { xi : T xi = 0 } of c_xi. The
/// membership test is exact rational arithmetic; the rotation used to
/// parameterize the hyperplane never enters.
inline Eigen::MatrixXcd hyperplane_mean(const QuasiPeriodicSeries& f, const Direction& n) {
    if (n.rational)
        throw std::invalid_argument("hyperplane_mean: direction classified rational");
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(f.rows(), f.cols());
    for (const auto& [xi, c] : f.coeffs())
        if (is_zero_vector(f.T().apply(xi))) s += c;
    return s;
}

/// Mean of the product f g on the hyperplane: contributions come from the
/// exact resonances T xi in Z^d, each pairing c_xi(f) with c_{-T xi}(g).
/// Multiplication order is f-coefficient times g-coefficient.
inline Eigen::MatrixXcd product_mean(const QuasiPeriodicSeries& f,
                                     const PeriodicField& g,
                                     const Direction& n) {
    if (n.rational)
        throw std::invalid_argument("product_mean: direction classified rational");
    if (f.cols() != g.rows())
        throw std::invalid_argument("product_mean: value dimension mismatch");
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(f.rows(), g.cols());
    for (const auto& [xi, c] : f.coeffs()) {
        Freq img;
        auto Txi = f.T().apply(xi);
        if (!is_integer_vector(Txi, &img)) continue;
        s += c * g.coeff(negate(img));
    }
    return s;
}

/// Brute-force windowed average (Shubin): quadrature of
/// phi(z') f(M (lambda z', 0)) / int phi over the compact bump phi.
/// Test oracle; converges to hyperplane_mean as lambda grows.
inline Eigen::MatrixXcd windowed_average_oracle(
    const std::function<Eigen::MatrixXcd(const Eigen::VectorXd&)>& f,
    const Direction& n, double lambda, int points_per_axis = 8192) {
    const int d = n.dim();
    const int dz = d - 1;
    Eigen::MatrixXd M = rotation_for(n.n);

    auto bump = [](double s) {
        double u = 1.0 - s * s;
        return u > 1e-12 ? std::exp(-1.0 / u) : 0.0;
    };

    // midpoint rule on [-1,1]^{d-1}
    int P = points_per_axis;
    if (dz >= 2) P = std::min(P, 512);
    double weight_sum = 0;
    Eigen::MatrixXcd acc;
    bool first = true;
    std::vector<int> idx(dz, 0);
    Eigen::VectorXd zp(dz), y(d);
    while (true) {
        double w = 1.0;
        for (int k = 0; k < dz; ++k) {
            zp[k] = -1.0 + (2.0 * idx[k] + 1.0) / P;
            w *= bump(zp[k]);
        }
        if (w > 0) {
            y.setZero();
            for (int i = 0; i < d; ++i) {
                double s = 0;
                for (int k = 0; k < dz; ++k) s += M(i, k) * (lambda * zp[k]);
                y[i] = s;
            }
            Eigen::MatrixXcd v = f(y);
            if (first) { acc = Eigen::MatrixXcd::Zero(v.rows(), v.cols()); first = false; }
            acc += w * v;
            weight_sum += w;
        }
        int k = dz - 1;
        while (k >= 0 && idx[k] == P - 1) idx[k--] = 0;
        if (k < 0) break;
        ++idx[k];
    }
    return acc / weight_sum;
}

} // namespace bltail
