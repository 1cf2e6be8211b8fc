#include "bltail/meanvalue.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace bltail;

namespace {

Direction irr2() {
    Eigen::VectorXd n(2);
    n << 1.0 / std::sqrt(3.0), std::sqrt(2.0 / 3.0);
    return classify_direction(n, 200);
}

Eigen::MatrixXcd cval(Complex z) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = z;
    return m;
}

} // namespace

TEST_CASE("rationalization by continued fractions") {
    CHECK(rationalize(0.5, 100) == Rational(1, 2));
    CHECK(rationalize(1.0 / 3.0, 1000) == Rational(1, 3));
    CHECK(rationalize(-0.75, 100) == Rational(-3, 4));
    Rational pi_r = rationalize(pi, 200);
    CHECK(pi_r.denominator() <= 200);
    CHECK(std::abs(boost::rational_cast<double>(pi_r) - pi) < 1e-3);
}

TEST_CASE("hyperplane mean: periodic case picks the zero coefficient") {
    Direction n = irr2();
    QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
    f.set_coeff(Freq{0, 0}, cval(2.5));
    f.set_coeff(Freq{1, 0}, cval(Complex(0.5, 0.1)));
    f.set_coeff(Freq{-1, 0}, cval(Complex(0.5, -0.1)));
    CHECK(std::abs(hyperplane_mean(f, n)(0, 0) - Complex(2.5)) < 1e-15);
}

TEST_CASE("hyperplane mean: no resonance means zero") {
    Direction n = irr2();
    RationalMatrix T = RationalMatrix::identity(2);
    QuasiPeriodicSeries f(2, 1, 1, T);
    f.set_coeff(Freq{1, 2}, cval(1.0));
    f.set_coeff(Freq{-1, -2}, cval(1.0));
    CHECK(std::abs(hyperplane_mean(f, n)(0, 0)) == 0.0);
}

TEST_CASE("hyperplane mean refuses rational directions") {
    Eigen::VectorXd n(2);
    n << 0.6, 0.8;
    Direction dir = classify_direction(n, 10);
    QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
    f.set_coeff(Freq{0, 0}, cval(1.0));
    CHECK_THROWS_AS(hyperplane_mean(f, dir), std::invalid_argument);
}

TEST_CASE("hyperplane mean with a singular rational T") {
    // T xi = 0 on the sublattice xi in span{(1,-1)}
    Direction n = irr2();
    RationalMatrix T(2, 2);
    T(0, 0) = Rational(1, 2);
    T(0, 1) = Rational(1, 2);
    T(1, 0) = Rational(1, 3);
    T(1, 1) = Rational(1, 3);
    QuasiPeriodicSeries f(2, 1, 1, T);
    f.set_coeff(Freq{1, -1}, cval(0.25)); // resonant: T xi = 0 exactly
    f.set_coeff(Freq{1, 0}, cval(7.0));   // not resonant
    f.set_coeff(Freq{-2, 2}, cval(0.5));  // resonant
    CHECK(std::abs(hyperplane_mean(f, n)(0, 0) - Complex(0.75)) < 1e-15);
}

TEST_CASE("product mean") {
    Direction n = irr2();
    SECTION("f = 1 returns c_0(g)") {
        QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
        f.set_coeff(Freq{0, 0}, cval(1.0));
        PeriodicField g(2, 1, 1);
        g.set_coeff(Freq{0, 0}, cval(3.5));
        g.set_coeff(Freq{2, 1}, cval(Complex(0.1, 0.2)));
        CHECK(std::abs(product_mean(f, g, n)(0, 0) - Complex(3.5)) < 1e-15);
    }
    SECTION("two periodic factors give the torus mean of the product") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> gs;
        QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
        PeriodicField g(2, 1, 1);
        PeriodicField freal(2, 1, 1);
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j) {
                if (i < 0 || (i == 0 && j < 0)) continue;
                Complex cf(gs(rng), (i == 0 && j == 0) ? 0.0 : gs(rng));
                Complex cg(gs(rng), (i == 0 && j == 0) ? 0.0 : gs(rng));
                freal.set_coeff(Freq{i, j}, cval(cf));
                g.set_coeff(Freq{i, j}, cval(cg));
            }
        for (const auto& [xi, c] : freal.coeffs()) f.set_coeff(xi, c);
        Eigen::MatrixXcd m = product_mean(f, g, n);
        // torus quadrature oracle
        int P = 64;
        Complex acc = 0;
        for (int a = 0; a < P; ++a)
            for (int b = 0; b < P; ++b) {
                Eigen::VectorXd y(2);
                y << double(a) / P, double(b) / P;
                acc += freal.evaluate(y)(0, 0) * g.evaluate(y)(0, 0);
            }
        acc /= double(P) * P;
        CHECK(std::abs(m(0, 0) - acc) < 1e-12);
    }
    SECTION("corrector-type lattice selection against brute-force enumeration") {
        // T = (T0^{-1})^t for T0 = [[1, 1], [0, 1]]
        IntMatrix T0(2, 2);
        T0 << 1, 1, 0, 1;
        IntMatrix T0inv = integer_inverse(T0);
        RationalMatrix T = RationalMatrix::from_integer(IntMatrix(T0inv.transpose()));
        QuasiPeriodicSeries f(2, 1, 1, T);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gs;
        for (int i = -2; i <= 2; ++i) f.set_coeff(Freq{i, 0}, cval(Complex(gs(rng), gs(rng))));
        PeriodicField g(2, 1, 1);
        for (int i = -3; i <= 3; ++i)
            for (int j = -3; j <= 3; ++j) g.set_coeff_raw(Freq{i, j}, cval(Complex(gs(rng), gs(rng))));
        Eigen::MatrixXcd m = product_mean(f, g, n);
        // brute force: total frequency T xi + zeta must vanish exactly
        Eigen::MatrixXd Td = T.to_double();
        Complex want = 0;
        for (const auto& [xi, cf] : f.coeffs())
            for (const auto& [zeta, cg] : g.coeffs()) {
                Eigen::Vector2d tot = Td * Eigen::Vector2d(xi[0], xi[1]) + Eigen::Vector2d(zeta[0], zeta[1]);
                if (tot.norm() < 1e-12) want += cf(0, 0) * cg(0, 0);
            }
        CHECK(std::abs(m(0, 0) - want) < 1e-13);
    }
    SECTION("dimension mismatch is rejected") {
        QuasiPeriodicSeries f(2, 1, 2, RationalMatrix::identity(2));
        PeriodicField g(2, 1, 1);
        g.set_coeff(Freq{0, 0}, cval(1.0));
        CHECK_THROWS_AS(product_mean(f, g, irr2()), std::invalid_argument);
    }
}

TEST_CASE("product mean reduces to the hyperplane mean for g = 1") {
    Direction n = irr2();
    QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
    f.set_coeff(Freq{0, 0}, cval(1.25));
    f.set_coeff(Freq{1, 1}, cval(Complex(0.3, 0.4)));
    f.set_coeff(Freq{-1, -1}, cval(Complex(0.3, -0.4)));
    PeriodicField one(2, 1, 1);
    one.set_coeff(Freq{0, 0}, cval(1.0));
    CHECK(std::abs(product_mean(f, one, n)(0, 0) - hyperplane_mean(f, n)(0, 0)) < 1e-15);
}

TEST_CASE("windowed average oracle") {
    Direction n = irr2();
    SECTION("constants are exact at every lambda") {
        auto f = [](const Eigen::VectorXd&) { return Eigen::MatrixXcd::Constant(1, 1, 3.0); };
        for (double lam : {5.0, 50.0}) {
            Eigen::MatrixXcd m = windowed_average_oracle(f, n, lam, 2048);
            CHECK(std::abs(m(0, 0) - Complex(3.0)) < 1e-12);
        }
    }
    SECTION("a pure nonzero mode decays by stationary phase") {
        auto f = [](const Eigen::VectorXd& y) {
            return Eigen::MatrixXcd::Constant(1, 1, std::exp(two_pi_i * y[0]));
        };
        double m50 = std::abs(windowed_average_oracle(f, n, 50, 8192)(0, 0));
        double m200 = std::abs(windowed_average_oracle(f, n, 200, 16384)(0, 0));
        CHECK(m200 < 1e-4);
        CHECK(m200 <= m50 + 1e-12);
    }
    SECTION("periodic series: oracle matches the lattice sum at lambda = 200") {
        std::mt19937_64 rng(9);
        std::normal_distribution<double> gs;
        QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
        f.set_coeff(Freq{0, 0}, cval(1.7));
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j) {
                if (i == 0 && j == 0) continue;
                f.set_coeff(Freq{i, j}, cval(Complex(gs(rng), gs(rng)) * 0.3));
            }
        auto eval = [&](const Eigen::VectorXd& y) { return f.evaluate(y); };
        Eigen::MatrixXcd want = hyperplane_mean(f, n);
        Eigen::MatrixXcd got = windowed_average_oracle(eval, n, 200, 16384);
        CHECK(std::abs(got(0, 0) - want(0, 0)) < 1e-3);
    }
}

TEST_CASE("hyperplane mean is linear and componentwise on vectors") {
    Direction n = irr2();
    QuasiPeriodicSeries f(2, 2, 1, RationalMatrix::identity(2));
    Eigen::MatrixXcd v(2, 1);
    v << Complex(1.0), Complex(-2.0);
    f.set_coeff(Freq{0, 0}, v);
    Eigen::MatrixXcd m = hyperplane_mean(f, n);
    CHECK(m(0, 0) == Complex(1.0));
    CHECK(m(1, 0) == Complex(-2.0));
}

TEST_CASE("Lipschitz transport of the mean over a synthetic family") {
    // c_xi(f_tau) = c_xi + tau (1 + |xi|^2) u_xi with |u_xi| <= 1 gives
    // |M(h_tau) - M(h_sigma)| <= |tau - sigma| sum (1 +ic|xi|^2) |c_xi(g)|
    Direction n = irr2();
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gs;
    PeriodicField g(2, 1, 1);
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) g.set_coeff_raw(Freq{i, j}, cval(Complex(gs(rng), gs(rng)) * 0.2));

    auto family = [&](double tau) {
        QuasiPeriodicSeries f(2, 1, 1, RationalMatrix::identity(2));
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j) {
                double w = 1.0 + double(i * i + j * j);
                f.set_coeff(Freq{i, j}, cval(Complex(0.1 * i, 0.05 * j) + tau * w * Complex(0.3, 0.1)));
            }
        return f;
    };
    double C_g = 0;
    for (const auto& [xi, c] : g.coeffs())
        C_g += (1.0 + double(xi[0] * xi[0] + xi[1] * xi[1])) * std::abs(c(0, 0)) * std::abs(Complex(0.3, 0.1));
    for (double tau : {0.0, 0.1, 0.5}) {
        double sigma = tau + 0.2;
        Complex mt = product_mean(family(tau), g, n)(0, 0);
        Complex ms = product_mean(family(sigma), g, n)(0, 0);
        CHECK(std::abs(mt - ms) <= C_g * std::abs(tau - sigma) + 1e-12);
    }
}
