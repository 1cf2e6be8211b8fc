#pragma once

#include "bltail/coeffs.hpp"
#include "bltail/rotations.hpp"

#include <numeric>

namespace bltail {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

// ── exact integer linear algebra (small matrices) ─────────────────────────

/// Fraction-free Gaussian elimination (Bareiss). Exact for the sizes used
/// here (d <= 6, moderate entries).
inline __int128 integer_determinant(const IntMatrix& T) {
    const int n = (int)T.rows();
    std::vector<std::vector<__int128>> a(n, std::vector<__int128>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] = T(i, j);
    __int128 prev = 1;
    int sign = 1;
    for (int k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            int p = -1;
            for (int i = k + 1; i < n; ++i)
                if (a[i][k] != 0) { p = i; break; }
            if (p < 0) return 0;
            std::swap(a[k], a[p]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

/// Exact inverse of an integer matrix with determinant +-1 (adjugate route).
inline IntMatrix integer_inverse(const IntMatrix& T) {
    const int n = (int)T.rows();
    __int128 det = integer_determinant(T);
    if (det != 1 && det != -1)
        throw std::invalid_argument("integer_inverse: determinant must be +-1");
    IntMatrix inv(n, n);
    IntMatrix minor(n - 1, n - 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int r = 0;
            for (int ii = 0; ii < n; ++ii) {
                if (ii == i) continue;
                int c = 0;
                for (int jj = 0; jj < n; ++jj) {
                    if (jj == j) continue;
                    minor(r, c++) = T(ii, jj);
                }
                ++r;
            }
            __int128 cof = integer_determinant(minor);
            if ((i + j) % 2) cof = -cof;
            inv(j, i) = (long long)(det == 1 ? cof : -cof);
        }
    return inv;
}

inline long long ext_gcd(long long a, long long b, long long& x, long long& y) {
    if (b == 0) {
        x = a >= 0 ? 1 : -1;
        y = 0;
        return std::abs(a);
    }
    long long x1, y1;
    long long g = ext_gcd(b, a % b, x1, y1);
    x = y1;
    y = x1 - (a / b) * y1;
    return g;
}

/// T in SL(d, Z) with T e_d = a, for gcd(a_1,...,a_d) = 1. Built by the
/// inductive scheme: 2x2 base via extended Euclid, then each step grafts a
/// Bezout pair for the last two entries onto the smaller matrix.
inline IntMatrix complete_unimodular(const std::vector<long long>& a) {
    const int d = (int)a.size();
    if (d < 2) throw std::invalid_argument("complete_unimodular: need d >= 2");
    long long g = 0;
    for (long long c : a) g = std::gcd(g, c);
    if (g != 1)
        throw std::invalid_argument(
            "complete_unimodular: gcd of the entries must be one");

    if (d == 2) {
        long long p, q;
        ext_gcd(a[0], a[1], p, q); // p a0 + q a1 = 1
        IntMatrix T(2, 2);
        T << q, a[0],
            -p, a[1];
        return T;
    }

    long long x, y;
    long long g2 = ext_gcd(a[d - 2], a[d - 1], x, y); // x a_{d-2} + y a_{d-1} = g2
    if (g2 == 0) { x = 1; y = 0; }                    // both trailing entries zero

    std::vector<long long> b(a.begin(), a.end() - 2);
    b.push_back(g2);
    IntMatrix S = complete_unimodular(b);

    long long p0, q0;
    ext_gcd(x, y, p0, q0); // x p0 + y q0 = 1

    IntMatrix T = IntMatrix::Zero(d, d);
    for (int i = 0; i < d - 2; ++i) {
        for (int j = 0; j < d - 2; ++j) T(i, j) = S(i, j);
        T(i, d - 1) = S(i, d - 2);
    }
    for (int j = 0; j < d - 2; ++j) {
        T(d - 2, j) = p0 * S(d - 2, j);
        T(d - 1, j) = q0 * S(d - 2, j);
    }
    T(d - 2, d - 2) = y;
    T(d - 1, d - 2) = -x;
    T(d - 2, d - 1) = a[d - 2];
    T(d - 1, d - 1) = a[d - 1];
    return T;
}

// ── direction analysis ────────────────────────────────────────────────────

struct Direction {
    Eigen::VectorXd n;
    bool rational = false;
    Freq witness;          // integer q with |n - q/|q|| <= 1e-12, when rational
    double kappa_est = 0;  // min |P_{n^perp}(xi)| |xi|^l over the scanned box
    double l = 0;          // Diophantine exponent used
    int scan_bound = 0;
    double layer_angle = std::numeric_limits<double>::quiet_NaN(); // n . nu0

    int dim() const { return (int)n.size(); }
};

/// Scan the lattice box 0 < |xi|_inf <= Q. A rational witness is any xi whose
/// normalization matches n to 1e-12; kappa_est is the Diophantine constant at
/// this bound (zero when a witness exists), never the true infimum.
inline Direction classify_direction(const Eigen::VectorXd& n, int Q, double l = 0) {
    const int d = (int)n.size();
    if (std::abs(n.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("classify_direction: input must be a unit vector");
    if (Q < 1) throw std::invalid_argument("classify_direction: Q >= 1");
    if (l <= 0) l = Params::diophantine_exponent(d);

    Direction dir;
    dir.n = n;
    dir.l = l;
    dir.scan_bound = Q;
    dir.kappa_est = std::numeric_limits<double>::infinity();
    int best_witness_norm = std::numeric_limits<int>::max();

    std::vector<int> xi(d, -Q);
    while (true) {
        bool zero = true;
        for (int c : xi) if (c != 0) { zero = false; break; }
        if (!zero) {
            double nn = 0, nd = 0;
            for (int k = 0; k < d; ++k) {
                nn += double(xi[k]) * xi[k];
                nd += xi[k] * n[k];
            }
            double proj2 = std::max(0.0, nn - nd * nd);
            double kappa = std::sqrt(proj2) * std::pow(nn, 0.5 * l);
            dir.kappa_est = std::min(dir.kappa_est, kappa);
            if (nd > 0 && proj2 < 1e-20 * nn) {
                double len = std::sqrt(nn), dist2 = 0;
                for (int k = 0; k < d; ++k) {
                    double e = n[k] - xi[k] / len;
                    dist2 += e * e;
                }
                int lin = 0;
                for (int c : xi) lin = std::max(lin, std::abs(c));
                if (std::sqrt(dist2) <= 1e-12 && lin < best_witness_norm) {
                    dir.rational = true;
                    dir.witness.assign(xi.begin(), xi.end());
                    best_witness_norm = lin;
                }
            }
        }
        int k = d - 1;
        while (k >= 0 && xi[k] == Q) xi[k--] = -Q;
        if (k < 0) break;
        ++xi[k];
    }
    if (dir.rational) dir.kappa_est = 0;
    return dir;
}

// ── shear matrices and tensor transforms ──────────────────────────────────

/// T_n for a unit vector m with |m_d| >= delta: identity except the last row
/// (-m_1/m_d, ..., -m_{d-1}/m_d, 1). Maps {z_d >= 0} onto {y . m >= 0}.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
shear_matrix(const Eigen::VectorXd& m, double delta = 0.05) {
    const int d = (int)m.size();
    if (std::abs(m[d - 1]) < delta)
        throw degenerate_direction_error("shear_matrix: |m_d| below threshold (degenerate direction)");
    Eigen::MatrixXd Tn = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd Tn_inv = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) {
        Tn(d - 1, i) = -m[i] / m[d - 1];
        Tn_inv(d - 1, i) = m[i] / m[d - 1];
    }
    return {Tn, Tn_inv};
}

/// Hoffman-type lower bound on the smallest singular value:
/// ((d-1)/d)^{(d-1)/2} |det T| max{ c_min/prod c_i, r_min/prod r_i }.
/// Returns 0 for (numerically) singular T.
inline double singular_value_lower_bound(const Eigen::MatrixXd& T) {
    const int d = (int)T.rows();
    double det = std::abs(T.determinant());
    if (det < 1e-300) return 0.0;
    double cmin = std::numeric_limits<double>::infinity(), cprod = 1;
    double rmin = std::numeric_limits<double>::infinity(), rprod = 1;
    for (int i = 0; i < d; ++i) {
        double c = T.col(i).norm(), r = T.row(i).norm();
        cmin = std::min(cmin, c);
        rmin = std::min(rmin, r);
        cprod *= c;
        rprod *= r;
    }
    if (cprod == 0 || rprod == 0) return 0.0;
    double fac = std::pow(double(d - 1) / d, 0.5 * (d - 1));
    return fac * det * std::max(cmin / cprod, rmin / rprod);
}

struct TransformResult {
    PeriodicTensor tensor;
    double lambda_bound = 0; // lambda * sigma_min(T^{-1})^2
    double sigma_min = 0;    // exact sigma_min(T^{-1})
};

/// Change of variables y = T x: blocks become T^{-1} B_{ij} T^{-t} and each
/// frequency xi moves to T^t xi, which must land on the integer lattice for
/// the result to stay Z^d-periodic.
inline TransformResult transform_tensor(const PeriodicTensor& t, const Eigen::MatrixXd& T) {
    const int d = t.dim(), N = t.sys();
    if ((int)T.rows() != d || (int)T.cols() != d)
        throw std::invalid_argument("transform_tensor: matrix dimension mismatch");
    if (std::abs(T.determinant()) < 1e-12)
        throw std::invalid_argument("transform_tensor: singular matrix");
    Eigen::MatrixXd Tinv = T.inverse();

    PeriodicTensor out(d, N);
    for (const auto& [xi, c] : t.coeffs()) {
        Eigen::VectorXd img(d);
        for (int k = 0; k < d; ++k) img[k] = dot(xi, T.col(k)); // (T^t xi)_k
        Freq eta(d);
        for (int k = 0; k < d; ++k) {
            eta[k] = (int)std::llround(img[k]);
            if (std::abs(img[k] - eta[k]) > 1e-9)
                throw std::invalid_argument(
                    "transform_tensor: transform does not preserve the frequency lattice");
        }
        TensorBlock nb(d, N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                Eigen::MatrixXcd Bij(d, d);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) Bij(a, b) = c.at(a, b)(i, j);
                Eigen::MatrixXcd Bt = Tinv * Bij * Tinv.transpose();
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) nb.at(a, b)(i, j) = Bt(a, b);
            }
        // both conjugate mirrors are present in the input and map to mirrored
        // images, so set_block's auto-pairing rewrites them consistently
        out.set_block(eta, nb);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Tinv);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    TransformResult r{std::move(out), t.lambda() * smin * smin, smin};
    r.tensor.set_ellipticity(r.lambda_bound, t.big_lambda() * smax * smax);
    return r;
}

/// Frames attached to a direction n over a layered structure nu0:
/// the unimodular T0 with T0 e_d = nu0, the shear for m = T0^t n, and the
/// ellipticity bookkeeping for the composed change of variables.
struct ShearFrame {
    Direction dir;
    std::vector<long long> nu0;  // gcd-reduced; negated when n . nu0 < 0
    bool flipped = false;
    IntMatrix T0, T0_inv;
    Eigen::VectorXd m;           // T0^t n
    Eigen::VectorXd m_hat;       // m / |m|
    Eigen::MatrixXd Tn, Tn_inv;
    double sigma_min_lb = 0;     // H-P bound for sigma_min(Tn_inv)
    double ellipticity_factor = 0; // sigma_min((T0 Tn)^{-1})^2
    Eigen::MatrixXd rotation;    // chart-local M with M e_d = n

    Eigen::MatrixXd T0_double() const {
        Eigen::MatrixXd D(T0.rows(), T0.cols());
        for (int i = 0; i < T0.rows(); ++i)
            for (int j = 0; j < T0.cols(); ++j) D(i, j) = double(T0(i, j));
        return D;
    }
    /// Map a strip frequency (eta', 0) back to the R^d frequency T0^{-t} eta.
    Freq lift_frequency(const Freq& eta) const {
        const int d = (int)T0.rows();
        Freq out(d, 0);
        for (int k = 0; k < d; ++k) {
            long long s = 0;
            for (int j = 0; j < d; ++j) s += T0_inv(j, k) * (j < (int)eta.size() ? eta[j] : 0);
            out[k] = (int)s;
        }
        return out;
    }
    /// Inverse relabeling: an R^d frequency with xi . nu0 = 0 maps to the
    /// strip frequency T0^t xi = (eta', 0).
    Freq drop_frequency(const Freq& xi) const {
        const int d = (int)T0.rows();
        Freq out(d, 0);
        for (int k = 0; k < d; ++k) {
            long long s = 0;
            for (int j = 0; j < d; ++j) s += T0(j, k) * xi[j];
            out[k] = (int)s;
        }
        return out;
    }
};

inline ShearFrame make_shear_frame(const Eigen::VectorXd& n,
                                   const std::vector<long long>& nu0_raw,
                                   const Params& params = {}) {
    const int d = (int)n.size();
    if (nu0_raw.size() != (size_t)d)
        throw std::invalid_argument("make_shear_frame: nu0 dimension mismatch");

    ShearFrame f;
    long long g = 0;
    for (long long c : nu0_raw) g = std::gcd(g, c);
    if (g == 0) throw std::invalid_argument("make_shear_frame: nu0 must be nonzero");
    f.nu0.resize(d);
    for (int k = 0; k < d; ++k) f.nu0[k] = nu0_raw[k] / g;

    double angle = 0;
    for (int k = 0; k < d; ++k) angle += n[k] * f.nu0[k];
    if (angle < 0) {
        for (auto& c : f.nu0) c = -c;
        angle = -angle;
        f.flipped = true;
    }
    if (angle < params.delta)
        throw degenerate_direction_error("make_shear_frame: |n . nu0| below delta");

    f.dir.n = n;
    f.dir.layer_angle = angle;
    f.T0 = complete_unimodular(f.nu0);
    f.T0_inv = integer_inverse(f.T0);

    f.m = f.T0_double().transpose() * n;
    f.m_hat = f.m / f.m.norm();
    double shear_delta = params.delta / (f.T0_double().norm() + 1.0);
    std::tie(f.Tn, f.Tn_inv) = shear_matrix(f.m_hat, shear_delta);
    f.sigma_min_lb = singular_value_lower_bound(f.Tn_inv);

    Eigen::MatrixXd total = f.T0_double() * f.Tn;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(total.inverse());
    double smin = svd.singularValues().minCoeff();
    f.ellipticity_factor = smin * smin;
    f.rotation = rotation_for(n);
    return f;
}

} // namespace bltail
