#pragma once

#include "bltail/tails.hpp"

#include <functional>
#include <random>
#include <set>

namespace bltail {

/// Strictly convex domain: an ellipsoid with semi-axes a_1..a_d. Closed-form
/// Gauss map and inverse; the principal curvatures are bounded below by
/// min(a_i) / max(a_j)^2, so (A4) holds by construction.
class ConvexDomain {
public:
    explicit ConvexDomain(Eigen::VectorXd semi_axes) : a_(std::move(semi_axes)) {
        if (a_.size() < 2 || a_.minCoeff() <= 0)
            throw std::invalid_argument("ConvexDomain: need positive semi-axes, d >= 2");
    }

    int dim() const { return (int)a_.size(); }
    const Eigen::VectorXd& semi_axes() const { return a_; }
    double curvature_lower_bound() const {
        return a_.minCoeff() / (a_.maxCoeff() * a_.maxCoeff());
    }

    double level(const Eigen::VectorXd& x) const {
        double s = 0;
        for (int k = 0; k < dim(); ++k) s += (x[k] / a_[k]) * (x[k] / a_[k]);
        return s;
    }

    /// Inward unit normal at a boundary point.
    Eigen::VectorXd inward_normal(const Eigen::VectorXd& x) const {
        if (std::abs(level(x) - 1.0) > 1e-10)
            throw std::invalid_argument("gauss_map: point is not on the boundary (projection error)");
        Eigen::VectorXd g(dim());
        for (int k = 0; k < dim(); ++k) g[k] = x[k] / (a_[k] * a_[k]);
        return -g / g.norm();
    }

    /// Inverse Gauss map: the boundary point whose inward normal is n.
    Eigen::VectorXd point_from_normal(const Eigen::VectorXd& n) const {
        if (std::abs(n.norm() - 1.0) > 1e-10)
            throw std::invalid_argument("inverse_gauss: normal must be a unit vector");
        double s = 0;
        for (int k = 0; k < dim(); ++k) s += n[k] * n[k] * a_[k] * a_[k];
        s = std::sqrt(s);
        Eigen::VectorXd x(dim());
        for (int k = 0; k < dim(); ++k) x[k] = -n[k] * a_[k] * a_[k] / s;
        return x;
    }

    /// van der Corput radical inverse (base 2): an orderless equidistributed
    /// stream, so prefix statistics are unbiased.
    static double radical_inverse(unsigned long long i) {
        double f = 0.5, r = 0;
        for (; i; i >>= 1, f *= 0.5)
            if (i & 1) r += f;
        return r;
    }

    /// Quasi-uniform boundary sample stream: golden-angle sequence on the
    /// circle, golden-spiral with van der Corput heights on the 2-sphere,
    /// seeded Gaussian directions for d >= 4; the sphere point u maps to the
    /// boundary as a .* u.
    Eigen::VectorXd sample(long index, long total, unsigned long long seed) const {
        (void)total;
        const int d = dim();
        Eigen::VectorXd u(d);
        if (d == 2) {
            const double golden = 0.6180339887498949;
            double th = 2.0 * pi * std::fmod(0.5 + index * golden, 1.0);
            u << std::cos(th), std::sin(th);
        } else if (d == 3) {
            const double ga = pi * (3.0 - std::sqrt(5.0));
            double z = 1.0 - 2.0 * radical_inverse((unsigned long long)index + 1);
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            u << r * std::cos(ga * index), r * std::sin(ga * index), z;
        } else {
            std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (unsigned long long)index);
            std::normal_distribution<double> gauss;
            for (int k = 0; k < d; ++k) u[k] = gauss(rng);
            u.normalize();
        }
        Eigen::VectorXd x(d);
        for (int k = 0; k < d; ++k) x[k] = a_[k] * u[k];
        return x / std::sqrt(level(x));
    }

private:
    Eigen::VectorXd a_;
};

struct BoundarySample {
    Eigen::VectorXd x;
    Direction normal;
    double angle = 0; // n . nu0 / |nu0|
};

struct HemisphereSet {
    std::vector<BoundarySample> samples;
    double tau = 0;
    long scanned = 0;
    long excluded_angle = 0;    // |angle| <= tau
    long excluded_rational = 0; // rational-witness hits
    bool empty_warning = false; // tau >= 1
    double excluded_fraction() const {
        return scanned == 0 ? 0.0 : double(excluded_angle + excluded_rational) / scanned;
    }
};

/// Sample the boundary set where |n(x) . nu0| > tau and the normal carries no
/// rational witness at the configured lattice bound.
inline HemisphereSet hemisphere_set(const ConvexDomain& dom, double tau, long samples,
                                    const std::vector<long long>& nu0,
                                    const Params& params = {},
                                    unsigned long long seed = 1) {
    if (tau <= 0 || tau >= 1) {
        if (tau >= 1) {
            HemisphereSet hs;
            hs.tau = tau;
            hs.empty_warning = true;
            return hs;
        }
        throw std::invalid_argument("hemisphere_set: need 0 < tau < 1");
    }
    const int d = dom.dim();
    Eigen::VectorXd nu(d);
    for (int k = 0; k < d; ++k) nu[k] = double(nu0[k]);
    nu.normalize();

    HemisphereSet hs;
    hs.tau = tau;
    const long budget = std::max<long>(samples * 100, 20000);
    const int Q = params.scan_bound(d);
    for (long i = 0; (long)hs.samples.size() < samples && i < budget; ++i) {
        ++hs.scanned;
        Eigen::VectorXd x = dom.sample(i, budget, seed);
        Eigen::VectorXd n = dom.inward_normal(x);
        double angle = n.dot(nu);
        if (std::abs(angle) <= tau) {
            ++hs.excluded_angle;
            continue;
        }
        Direction dir = classify_direction(n, Q);
        if (dir.rational) {
            ++hs.excluded_rational;
            continue;
        }
        dir.layer_angle = angle;
        hs.samples.push_back({std::move(x), std::move(dir), angle});
    }
    return hs;
}

// ── oscillating boundary data ─────────────────────────────────────────────

struct Monomial {
    std::vector<int> powers; // one exponent per coordinate of x
    double c = 0;
};

struct DataTerm {
    Freq xi;
    Eigen::VectorXcd coeff;       // value in C^N
    std::vector<Monomial> poly;   // real polynomial factor in x
};

/// g(x, y) = sum_xi c_xi(x) e^{2 pi i y . xi} with c_xi(x) = coeff * poly(x).
/// add_term inserts the conjugate mirror so g stays real.
class OscillatingData {
public:
    OscillatingData(int d, int N) : d_(d), N_(N) {}

    int dim() const { return d_; }
    int sys() const { return N_; }
    const std::vector<DataTerm>& terms() const { return terms_; }

    void add_term(const Freq& xi, const Eigen::VectorXcd& coeff, std::vector<Monomial> poly) {
        if ((int)xi.size() != d_ || coeff.size() != N_)
            throw std::invalid_argument("OscillatingData: term shape mismatch");
        if (poly.empty()) poly.push_back({std::vector<int>(d_, 0), 1.0});
        terms_.push_back({xi, coeff, poly});
        if (!is_zero(xi)) terms_.push_back({negate(xi), coeff.conjugate(), std::move(poly)});
        cutoff_ = std::max(cutoff_, linf_norm(xi));
    }

    int cutoff() const { return cutoff_; }

    static double eval_poly(const std::vector<Monomial>& poly, const Eigen::VectorXd& x) {
        double s = 0;
        for (const auto& m : poly) {
            double v = m.c;
            for (size_t k = 0; k < m.powers.size(); ++k) v *= std::pow(x[k], m.powers[k]);
            s += v;
        }
        return s;
    }

    Eigen::VectorXcd coeff_at(const Freq& xi, const Eigen::VectorXd& x) const {
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(N_);
        for (const auto& t : terms_)
            if (t.xi == xi) s += t.coeff * eval_poly(t.poly, x);
        return s;
    }

    std::vector<Freq> support() const {
        std::set<Freq> sup;
        for (const auto& t : terms_) sup.insert(t.xi);
        return {sup.begin(), sup.end()};
    }

    Complex evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int component = 0) const {
        Complex s = 0;
        for (const auto& t : terms_)
            s += t.coeff[component] * eval_poly(t.poly, x) * phase(t.xi, y);
        return s;
    }

    /// Measured decay constant sup_{xi,x} |c_xi(x)| (1+|xi|)^{d+1} and the
    /// x-Lipschitz constant with the same weight, over boundary samples.
    std::pair<double, double> verify_decay(const ConvexDomain& dom, int nsamples = 64) const {
        double cg = 0, lip = 0;
        for (int i = 0; i < nsamples; ++i) {
            Eigen::VectorXd x = dom.sample(i, nsamples, 7);
            Eigen::VectorXd x2 = dom.sample((i + 1) % nsamples, nsamples, 7);
            for (const auto& xi : support()) {
                double w = std::pow(1.0 + l2_norm(xi), d_ + 1);
                Eigen::VectorXcd c1 = coeff_at(xi, x), c2 = coeff_at(xi, x2);
                cg = std::max(cg, c1.cwiseAbs().maxCoeff() * w);
                double dx = (x - x2).norm();
                if (dx > 1e-12)
                    lip = std::max(lip, (c1 - c2).cwiseAbs().maxCoeff() * w / dx);
            }
        }
        return {cg, lip};
    }

private:
    int d_, N_;
    int cutoff_ = 0;
    std::vector<DataTerm> terms_;
};

/// Remainder of sum over |xi|_inf > K of (1 + |xi|)^{-(d+1)} (upper bound:
/// shell counts against the l_inf shell radius).
inline double coefficient_tail_sum(int d, int K, int shells = 400) {
    double s = 0;
    for (int m = K + 1; m <= K + shells; ++m) {
        double count = std::pow(2.0 * m + 1.0, d) - std::pow(2.0 * m - 1.0, d);
        s += count * std::pow(1.0 + m, -(d + 1));
    }
    // integral bound for the rest: count(m) <= 2^d d m^{d-1}
    double M = K + shells;
    s += std::pow(2.0, d) * d / M;
    return s;
}

// ── assembled field and probes ────────────────────────────────────────────

struct GStarSample {
    Eigen::VectorXd x;
    Eigen::VectorXd n;
    double angle = 0;
    Eigen::VectorXd g;        // real part of the assembled series
    double imag_residual = 0; // should vanish for real data
    double remainder = 0;     // truncation budget
};

struct GStarField {
    double tau = 0;
    int kg = 0;
    std::vector<GStarSample> samples;
};

/// g*(x) = sum_{|xi|_inf <= K_g} v_xi^inf(n(x)) c_xi(x), with the remainder
/// budget C_tail * sum_{|xi| > K_g} C_g (1+|xi|)^{-(d+1)}.
inline GStarSample assemble_gstar(const ConvexDomain& dom, const OscillatingData& data,
                                  const std::function<Eigen::MatrixXcd(const Freq&)>& tails,
                                  const BoundarySample& sample, int kg,
                                  double c_g, double c_tail) {
    const int d = dom.dim();
    GStarSample out;
    out.x = sample.x;
    out.n = sample.normal.n;
    out.angle = sample.angle;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(data.sys());
    for (const auto& xi : data.support()) {
        if (linf_norm(xi) > kg) continue;
        Eigen::VectorXcd c = data.coeff_at(xi, sample.x);
        if (c.cwiseAbs().maxCoeff() == 0) continue;
        acc += tails(xi) * c;
    }
    out.g = acc.real();
    out.imag_residual = acc.imag().cwiseAbs().maxCoeff();
    out.remainder = c_tail * c_g * coefficient_tail_sum(d, kg);
    return out;
}

struct LipschitzReport {
    double L_emp = 0;
    double L_emp_doubled = 0; // with twice the far pairs
    double change = 0;        // relative change under doubling
    long pairs = 0;
    double h_min = 0;
};

/// Empirical Lipschitz constant: max |g*(x) - g*(y)| / |x - y| over near
/// pairs (each sample with its nearest neighbor) plus seeded random far
/// pairs, restricted to |x - y| >= h_min.
inline LipschitzReport lipschitz_probe(const GStarField& field, long pairs,
                                       double h_min = 1e-3, unsigned long long seed = 42) {
    const auto& S = field.samples;
    if (S.size() < 2) throw std::invalid_argument("lipschitz_probe: need at least 2 samples");

    auto ratio = [&](size_t i, size_t j) {
        double dx = (S[i].x - S[j].x).norm();
        if (dx < h_min) return 0.0;
        return (S[i].g - S[j].g).norm() / dx;
    };

    double near_max = 0;
    for (size_t i = 0; i < S.size(); ++i) {
        size_t best = i == 0 ? 1 : 0;
        double bd = (S[i].x - S[best].x).norm();
        for (size_t j = 0; j < S.size(); ++j) {
            if (j == i) continue;
            double dxy = (S[i].x - S[j].x).norm();
            if (dxy < bd) { bd = dxy; best = j; }
        }
        near_max = std::max(near_max, ratio(i, best));
    }

    auto far_max = [&](long count, unsigned long long sd) {
        std::mt19937_64 rng(sd);
        std::uniform_int_distribution<size_t> pick(0, S.size() - 1);
        double m = 0;
        for (long p = 0; p < count; ++p) {
            size_t i = pick(rng), j = pick(rng);
            if (i == j) continue;
            m = std::max(m, ratio(i, j));
        }
        return m;
    };

    long far_count = std::max<long>(0, pairs - (long)S.size());
    LipschitzReport rep;
    rep.pairs = pairs;
    rep.h_min = h_min;
    rep.L_emp = std::max(near_max, far_max(far_count, seed));
    rep.L_emp_doubled = std::max(near_max, far_max(2 * far_count, seed));
    rep.change = std::abs(rep.L_emp_doubled - rep.L_emp) / std::max(rep.L_emp, 1e-300);
    return rep;
}

} // namespace bltail
