#include "bltail/lattice.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace bltail;

namespace {

IntMatrix to_int_matrix(const Eigen::MatrixXd& T) {
    IntMatrix M(T.rows(), T.cols());
    for (int i = 0; i < T.rows(); ++i)
        for (int j = 0; j < T.cols(); ++j) M(i, j) = (long long)std::llround(T(i, j));
    return M;
}

/// Independent brute-force kappa scan (the oracle for classify_direction).
double kappa_oracle(const Eigen::VectorXd& n, int Q, double l) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = -Q; i <= Q; ++i)
        for (int j = -Q; j <= Q; ++j) {
            if (i == 0 && j == 0) continue;
            Eigen::Vector2d xi(i, j);
            double proj = (xi - xi.dot(n) * n).norm();
            best = std::min(best, proj * std::pow(xi.norm(), l));
        }
    return best;
}

} // namespace

TEST_CASE("direction classification") {
    SECTION("exact rational direction (3/5, 4/5)") {
        Eigen::VectorXd n(2);
        n << 0.6, 0.8;
        Direction d = classify_direction(n, 10);
        REQUIRE(d.rational);
        CHECK(d.witness == Freq{3, 4});
        CHECK(d.kappa_est == 0.0);
    }
    SECTION("e_d is rational with witness e_d") {
        Eigen::VectorXd n(2);
        n << 0.0, 1.0;
        Direction d = classify_direction(n, 10);
        REQUIRE(d.rational);
        CHECK(d.witness == Freq{0, 1});
    }
    SECTION("(1, sqrt 2)/sqrt 3 is irrational at bound 1000") {
        Eigen::VectorXd n(2);
        n << 1.0 / std::sqrt(3.0), std::sqrt(2.0 / 3.0);
        Direction d = classify_direction(n, 1000);
        CHECK_FALSE(d.rational);
        CHECK(d.kappa_est > 0.0);
        CHECK(d.kappa_est == Catch::Approx(kappa_oracle(n, 1000, d.l)).epsilon(1e-12));
    }
    SECTION("non-unit input is rejected") {
        Eigen::VectorXd n(2);
        n << 1.0, 1.0;
        CHECK_THROWS_AS(classify_direction(n, 10), std::invalid_argument);
    }
}

TEST_CASE("unimodular completion") {
    SECTION("(0,1) completes to the identity") {
        IntMatrix T = complete_unimodular({0, 1});
        CHECK(T(0, 0) == 1);
        CHECK(T(0, 1) == 0);
        CHECK(T(1, 0) == 0);
        CHECK(T(1, 1) == 1);
    }
    SECTION("(2,3) gives the Euclid matrix") {
        IntMatrix T = complete_unimodular({2, 3});
        CHECK(T(0, 0) == 1);
        CHECK(T(1, 0) == 1);
        CHECK(T(0, 1) == 2);
        CHECK(T(1, 1) == 3);
        CHECK((long long)integer_determinant(T) == 1);
    }
    SECTION("(6,10,15) has gcd one and completes") {
        std::vector<long long> a{6, 10, 15};
        IntMatrix T = complete_unimodular(a);
        CHECK((long long)integer_determinant(T) == 1);
        for (int i = 0; i < 3; ++i) CHECK(T(i, 2) == a[i]);
    }
    SECTION("gcd != 1 is rejected") {
        CHECK_THROWS_AS(complete_unimodular({2, 4}), std::invalid_argument);
        CHECK_THROWS_AS(complete_unimodular({0, 0, 0}), std::invalid_argument);
    }
    SECTION("property: exact determinant one and prescribed column, d <= 6") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<long long> entry(-30, 30);
        std::uniform_int_distribution<int> dims(2, 6);
        int done = 0;
        while (done < 500) {
            int d = dims(rng);
            std::vector<long long> a(d);
            long long g = 0;
            for (auto& c : a) {
                c = entry(rng);
                g = std::gcd(g, c);
            }
            if (g != 1) continue;
            IntMatrix T = complete_unimodular(a);
            REQUIRE((long long)integer_determinant(T) == 1);
            for (int i = 0; i < d; ++i) REQUIRE(T(i, d - 1) == a[i]);
            IntMatrix inv = integer_inverse(T);
            IntMatrix prod = T * inv;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) REQUIRE(prod(i, j) == (i == j ? 1 : 0));
            ++done;
        }
    }
}

TEST_CASE("shear matrices") {
    SECTION("m = e_d gives the identity") {
        Eigen::VectorXd m(3);
        m << 0, 0, 1;
        auto [Tn, Tn_inv] = shear_matrix(m);
        CHECK((Tn - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
        CHECK((Tn_inv - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
    }
    SECTION("d = 2 closed form") {
        Eigen::VectorXd m(2);
        m << 0.6, 0.8;
        auto [Tn, Tn_inv] = shear_matrix(m);
        CHECK(Tn(1, 0) == Catch::Approx(-0.75));
        CHECK(Tn(0, 0) == 1.0);
        CHECK(Tn(1, 1) == 1.0);
        CHECK(Tn_inv(1, 0) == Catch::Approx(0.75));
    }
    SECTION("Tn maps the half-space boundary onto the hyperplane") {
        Eigen::VectorXd m(2);
        m << 0.6, 0.8;
        auto [Tn, Tn_inv] = shear_matrix(m);
        (void)Tn_inv;
        Eigen::VectorXd z(2);
        z << 1.7, 0.0;
        CHECK(std::abs((Tn * z).dot(m)) < 1e-14);
    }
    SECTION("algebraic inverse to rounding") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int it = 0; it < 50; ++it) {
            Eigen::VectorXd m(4);
            for (int k = 0; k < 4; ++k) m[k] = u(rng);
            m[3] = 0.1 + std::abs(m[3]);
            m.normalize();
            if (std::abs(m[3]) < 0.1) continue;
            auto [Tn, Tn_inv] = shear_matrix(m, 0.05);
            CHECK((Tn * Tn_inv - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-14);
        }
    }
    SECTION("degenerate direction is refused") {
        Eigen::VectorXd m(2);
        m << 1.0, 0.01;
        CHECK_THROWS_AS(shear_matrix(m, 0.05), degenerate_direction_error);
    }
}

TEST_CASE("tensor transform under change of variables") {
    SECTION("identity transform leaves the tensor alone") {
        PeriodicTensor t = PeriodicTensor::isotropic(2, 1, {{Freq{0, 0}, 2.0}, {Freq{1, 0}, 0.5}});
        auto r = transform_tensor(t, Eigen::MatrixXd::Identity(2, 2));
        for (const auto& [xi, c] : t.coeffs())
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    CHECK((r.tensor.coeff(xi, a, b) - c.at(a, b)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("orthogonal transform of the Laplacian is the Laplacian") {
        PeriodicTensor lap = PeriodicTensor::isotropic(2, 1, {{Freq{0, 0}, 1.0}});
        double th = 0.7;
        Eigen::MatrixXd R(2, 2);
        R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        auto r = transform_tensor(lap, R);
        CHECK((r.tensor.coeff(Freq{0, 0}, 0, 0) - Eigen::MatrixXcd::Identity(1, 1)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(std::abs(r.tensor.coeff(Freq{0, 0}, 0, 1)(0, 0)) < 1e-14);
    }
    SECTION("shear of the Laplacian and its ellipticity bound") {
        PeriodicTensor lap = PeriodicTensor::isotropic(2, 1, {{Freq{0, 0}, 1.0}});
        lap.set_ellipticity(1.0, 1.0);
        Eigen::VectorXd n(2);
        n << 0.6, 0.8;
        auto [Tn, Tn_inv] = shear_matrix(n);
        auto r = transform_tensor(lap, Tn);
        // B = Tn_inv Tn_inv^t
        Eigen::MatrixXd B(2, 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) B(a, b) = r.tensor.coeff(Freq{0, 0}, a, b)(0, 0).real();
        Eigen::MatrixXd want = Tn_inv * Tn_inv.transpose();
        CHECK((B - want).cwiseAbs().maxCoeff() < 1e-14);
        // lower bound of the paper: lambda_{A_n} >= c_d lambda n_d^2 with c_d = 1/2
        CHECK(r.lambda_bound >= 0.5 * 0.64 - 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
        CHECK(r.lambda_bound <= es.eigenvalues().minCoeff() + 1e-12);
    }
    SECTION("transforms compose along the chain rule") {
        PeriodicTensor t = PeriodicTensor::isotropic(2, 1, {{Freq{0, 0}, 2.0}, {Freq{1, 1}, 0.3}});
        IntMatrix S_i = complete_unimodular({1, 2});
        IntMatrix T_i = complete_unimodular({3, 1});
        Eigen::MatrixXd S(2, 2), T(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                S(i, j) = double(S_i(i, j));
                T(i, j) = double(T_i(i, j));
            }
        auto chained = transform_tensor(transform_tensor(t, S).tensor, T);
        auto direct = transform_tensor(t, S * T);
        for (const auto& [xi, c] : direct.tensor.coeffs())
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    CHECK((chained.tensor.coeff(xi, a, b) - c.at(a, b)).cwiseAbs().maxCoeff() < 1e-12);
        // pointwise substitution check B~(x) = T^{-1} B(Tx) T^{-t} on samples
        Eigen::MatrixXd ST = S * T;
        Eigen::MatrixXd Minv = ST.inverse();
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0, 1);
        for (int it = 0; it < 10; ++it) {
            Eigen::VectorXd x(2);
            x << u(rng), u(rng);
            TensorBlock lhs = direct.tensor.evaluate(x);
            TensorBlock rhs_raw = t.evaluate(ST * x);
            Eigen::MatrixXcd B(2, 2), L(2, 2);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    B(a, b) = rhs_raw.at(a, b)(0, 0);
                    L(a, b) = lhs.at(a, b)(0, 0);
                }
            Eigen::MatrixXcd want = Minv * B * Minv.transpose();
            CHECK((L - want).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SECTION("singular matrix is rejected") {
        PeriodicTensor t = PeriodicTensor::isotropic(2, 1, {{Freq{0, 0}, 1.0}});
        Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 2);
        CHECK_THROWS_AS(transform_tensor(t, Z), std::invalid_argument);
    }
}

TEST_CASE("smallest-singular-value lower bound") {
    SECTION("identity in d = 2") {
        double b = singular_value_lower_bound(Eigen::MatrixXd::Identity(2, 2));
        CHECK(b == Catch::Approx(std::sqrt(0.5)));
        CHECK(b <= 1.0);
    }
    SECTION("shear inverse bound (d-1/d)^{1/2} n_d") {
        Eigen::VectorXd n(2);
        n << 0.6, 0.8;
        auto [Tn, Tn_inv] = shear_matrix(n);
        (void)Tn;
        double b = singular_value_lower_bound(Tn_inv);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Tn_inv);
        double smin = svd.singularValues().minCoeff();
        CHECK(b >= std::sqrt(0.5) * 0.8 - 1e-12);
        CHECK(b <= smin + 1e-12);
    }
    SECTION("property: bound never exceeds the true sigma_min") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g;
        for (int it = 0; it < 200; ++it) {
            int d = 2 + (it % 5);
            Eigen::MatrixXd T(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) T(i, j) = g(rng);
            if (std::abs(T.determinant()) < 1e-8) continue;
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
            double smin = svd.singularValues().minCoeff();
            REQUIRE(singular_value_lower_bound(T) <= smin * (1 + 1e-12));
        }
    }
    SECTION("singular input returns zero") {
        CHECK(singular_value_lower_bound(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
    }
}

TEST_CASE("shear frame assembly") {
    Eigen::VectorXd n(2);
    n << 1.0 / std::sqrt(3.0), std::sqrt(2.0 / 3.0);
    ShearFrame f = make_shear_frame(n, {0, 1});
    CHECK((long long)integer_determinant(f.T0) == 1);
    CHECK(f.dir.layer_angle == Catch::Approx(n[1]));
    CHECK_FALSE(f.flipped);
    CHECK(f.sigma_min_lb > 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.Tn_inv);
    CHECK(f.sigma_min_lb <= svd.singularValues().minCoeff() + 1e-12);
    // frequency relabeling round-trips
    Freq eta{3, 0};
    Freq lifted = f.lift_frequency(eta);
    CHECK(f.drop_frequency(lifted) == eta);

    // mirrored construction for n . nu0 < 0
    ShearFrame fm = make_shear_frame(n, {0, -1});
    CHECK(fm.flipped);
    CHECK(fm.dir.layer_angle == Catch::Approx(n[1]));

    Eigen::VectorXd bad(2);
    bad << 1.0, 0.0;
    CHECK_THROWS_AS(make_shear_frame(bad, {0, 1}), degenerate_direction_error);

    IntMatrix id = to_int_matrix(Eigen::MatrixXd::Identity(2, 2));
    CHECK((long long)integer_determinant(id) == 1);
}
