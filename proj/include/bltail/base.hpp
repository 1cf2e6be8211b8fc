#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bltail {

using Complex = std::complex<double>;

/// Integer frequency vector in Z^d. Lexicographic ordering of std::vector
/// makes it directly usable as an ordered map key.
using Freq = std::vector<int>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr Complex two_pi_i{0.0, 2.0 * pi};

// ── error taxonomy ────────────────────────────────────────────────────────

/// Malformed input object (missing conjugate pair, inconsistent shapes, ...).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// |n · nu0| (or a shear pivot) below the configured threshold.
struct degenerate_direction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Direction left the chart of a rotation field.
struct out_of_chart_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A linear solve failed or its residual is above tolerance.
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A truncated-domain solution has not decayed enough ("increase L").
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required precomputed ingredient is missing.
struct dependency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ── frequency helpers ─────────────────────────────────────────────────────

inline int linf_norm(const Freq& xi) {
    int m = 0;
    for (int c : xi) m = std::max(m, std::abs(c));
    return m;
}

inline double l2_norm(const Freq& xi) {
    double s = 0;
    for (int c : xi) s += double(c) * c;
    return std::sqrt(s);
}

inline bool is_zero(const Freq& xi) {
    for (int c : xi) if (c != 0) return false;
    return true;
}

inline Freq negate(const Freq& xi) {
    Freq m(xi.size());
    for (size_t k = 0; k < xi.size(); ++k) m[k] = -xi[k];
    return m;
}

inline Freq add(const Freq& a, const Freq& b) {
    Freq s(a.size());
    for (size_t k = 0; k < a.size(); ++k) s[k] = a[k] + b[k];
    return s;
}

inline Freq sub(const Freq& a, const Freq& b) {
    Freq s(a.size());
    for (size_t k = 0; k < a.size(); ++k) s[k] = a[k] - b[k];
    return s;
}

inline long long idot(const Freq& a, const std::vector<long long>& b) {
    long long s = 0;
    for (size_t k = 0; k < a.size(); ++k) s += (long long)a[k] * b[k];
    return s;
}

inline double dot(const Freq& xi, const Eigen::VectorXd& y) {
    double s = 0;
    for (int k = 0; k < (int)xi.size(); ++k) s += xi[k] * y[k];
    return s;
}

/// Enumerate all xi in Z^d with |xi|_inf <= K (includes zero).
inline std::vector<Freq> freq_box(int d, int K) {
    std::vector<Freq> out;
    Freq xi(d, -K);
    while (true) {
        out.push_back(xi);
        int k = d - 1;
        while (k >= 0 && xi[k] == K) xi[k--] = -K;
        if (k < 0) break;
        ++xi[k];
    }
    return out;
}

/// exp(2*pi*i * xi . y)
inline Complex phase(const Freq& xi, const Eigen::VectorXd& y) {
    return std::exp(two_pi_i * dot(xi, y));
}

// ── global numeric defaults ───────────────────────────────────────────────

struct Params {
    double delta = 0.05;          // minimum |n . nu0| for hemisphere work
    double unit_tol = 1e-12;      // |n| = 1 tolerance
    double herm_tol = 1e-14;      // Hermitian-closure tolerance
    int direction_scan_2d = 1000; // lattice bound Q for d = 2
    int direction_scan_3d = 64;   // lattice bound Q for d = 3
    int direction_scan_hi = 16;   // lattice bound Q for d >= 4
    long long max_denominator = 1000000; // rationalization bound

    int scan_bound(int d) const {
        if (d <= 2) return direction_scan_2d;
        if (d == 3) return direction_scan_3d;
        return direction_scan_hi;
    }
    /// Diophantine exponent l with (d-1) l > 1.
    static double diophantine_exponent(int d) {
        return 2.0 / (d - 1) + 0.1;
    }
};

} // namespace bltail
