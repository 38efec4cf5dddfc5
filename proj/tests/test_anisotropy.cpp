#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "gcflow/anisotropy.hpp"

using gcf::AnisotropyDescriptor;
using gcf::Vec;
using Catch::Approx;

namespace {

template <int M>
Vec<M> random_unit(std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec<M> x;
    do {
        for (int a = 0; a < M; ++a) x[a] = gauss(rng);
    } while (x.norm() < 1e-8);
    x.normalize();
    return x;
}

}  // namespace

TEST_CASE("support function values of the built-in families") {
    SECTION("constant anisotropy is constant") {
        const auto d = AnisotropyDescriptor::constant(1.0);
        std::mt19937 rng(7);
        for (int k = 0; k < 20; ++k) {
            REQUIRE(gcf::evaluate_support<2>(d, random_unit<2>(rng)) == Approx(1.0));
            REQUIRE(gcf::evaluate_support<3>(d, random_unit<3>(rng)) == Approx(1.0));
        }
    }
    SECTION("ellipse a=(1,2) at (1,0)") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        REQUIRE(gcf::evaluate_support<2>(d, Vec<2>(1.0, 0.0)) == Approx(1.0));
    }
    SECTION("shifted sphere center -0.3 e2, radius 1 at e2") {
        const auto d = AnisotropyDescriptor::shifted_sphere(Eigen::Vector2d(0.0, -0.3), 1.0);
        REQUIRE(gcf::evaluate_support<2>(d, Vec<2>(0.0, 1.0)) == Approx(0.7));
    }
    SECTION("non-unit input violates the precondition") {
        const auto d = AnisotropyDescriptor::constant(1.0);
        REQUIRE_THROWS_AS(gcf::evaluate_support<2>(d, Vec<2>(1.0, 1.0)), gcf::precondition_error);
    }
    SECTION("sign-changing perturbation is an invalid descriptor where f <= 0") {
        AnisotropyDescriptor::LinearTerm term;
        term.direction = Eigen::Vector2d(0.0, 1.0);
        term.amplitude = 2.0;
        const auto d = AnisotropyDescriptor::perturbed(AnisotropyDescriptor::constant(1.0), {term});
        REQUIRE_THROWS_AS(gcf::evaluate_support<2>(d, Vec<2>(0.0, -1.0)),
                          gcf::invalid_descriptor_error);
    }
}

TEST_CASE("homogeneous extension derivatives") {
    SECTION("constant: gradient x, hessian I - x x^T") {
        const auto d = AnisotropyDescriptor::constant(1.0);
        std::mt19937 rng(11);
        for (int k = 0; k < 10; ++k) {
            const Vec<3> x = random_unit<3>(rng);
            const auto jet = gcf::homogeneous_derivatives<3>(d, x);
            REQUIRE((jet.gradient - x).norm() < 1e-14);
            const gcf::Mat<3> expect = gcf::Mat<3>::Identity() - x * x.transpose();
            REQUIRE((jet.hessian - expect).norm() < 1e-14);
        }
    }
    SECTION("ellipse a=(1,2): gradient at (1,0) is (1,0)") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        const auto jet = gcf::homogeneous_derivatives<2>(d, Vec<2>(1.0, 0.0));
        REQUIRE(jet.gradient[0] == Approx(1.0));
        REQUIRE(jet.gradient[1] == Approx(0.0).margin(1e-14));
    }
    SECTION("Euler relation <grad, x> = f(x) for 100 random directions") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector3d(1.0, 1.0, 2.0));
        std::mt19937 rng(13);
        for (int k = 0; k < 100; ++k) {
            const Vec<3> x = random_unit<3>(rng);
            const auto jet = gcf::homogeneous_derivatives<3>(d, x);
            REQUIRE(std::abs(jet.gradient.dot(x) - jet.value) < 1e-8);
            REQUIRE((jet.hessian * x).norm() < 1e-8);
        }
    }
    SECTION("numeric path cross-validates the analytic one") {
        auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        std::mt19937 rng(17);
        for (int k = 0; k < 20; ++k) {
            const Vec<2> x = random_unit<2>(rng);
            const auto exact = gcf::homogeneous_derivatives<2>(d, x);
            d.numeric_derivatives = true;
            const auto numeric = gcf::homogeneous_derivatives<2>(d, x);
            d.numeric_derivatives = false;
            REQUIRE((numeric.gradient - exact.gradient).norm() < 1e-7);
            REQUIRE((numeric.hessian - exact.hessian).norm() < 1e-4);
            // Euler relation holds on the numeric path within 10 fd_step^2.
            REQUIRE(std::abs(numeric.gradient.dot(x) - numeric.value) < 10 * d.fd_step * d.fd_step);
        }
    }
    SECTION("degenerate descriptors are rejected") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 0.0));
        REQUIRE_THROWS_AS(gcf::homogeneous_derivatives<2>(d, Vec<2>(1.0, 0.0)),
                          gcf::invalid_descriptor_error);
    }
}

TEST_CASE("radii matrix") {
    SECTION("unit sphere has unit radii") {
        const auto d = AnisotropyDescriptor::constant(1.0);
        std::mt19937 rng(19);
        for (int k = 0; k < 10; ++k) {
            const Vec<3> x = random_unit<3>(rng);
            const auto basis = gcf::tangent_basis<3>(x);
            const auto r = gcf::radii_matrix<3>(d, x, basis);
            REQUIRE((r - Eigen::Matrix2d::Identity()).norm() < 1e-12);
        }
    }
    SECTION("shifting the sphere does not change the radii") {
        const auto d = AnisotropyDescriptor::shifted_sphere(Eigen::Vector2d(0.3, -0.1), 1.0);
        std::mt19937 rng(23);
        for (int k = 0; k < 10; ++k) {
            const Vec<2> x = random_unit<2>(rng);
            const auto r = gcf::radii_matrix<2>(d, x, gcf::tangent_basis<2>(x));
            REQUIRE(r(0, 0) == Approx(1.0).margin(1e-12));
        }
    }
    SECTION("ellipse a=(1,2) at (1,0): curvature radius 4") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        const Vec<2> x(1.0, 0.0);
        const auto r = gcf::radii_matrix<2>(d, x, gcf::tangent_basis<2>(x));
        REQUIRE(r(0, 0) == Approx(4.0));
    }
    SECTION("bad basis violates the precondition") {
        const auto d = AnisotropyDescriptor::constant(1.0);
        const Vec<2> x(1.0, 0.0);
        REQUIRE_THROWS_AS(gcf::radii_matrix<2>(d, x, {Vec<2>(1.0, 0.0)}), gcf::precondition_error);
    }
}

TEST_CASE("Wulff points") {
    SECTION("sphere: wulff point is the direction itself") {
        const auto d = AnisotropyDescriptor::constant(1.0);
        std::mt19937 rng(29);
        const Vec<3> x = random_unit<3>(rng);
        REQUIRE((gcf::wulff_point<3>(d, x) - x).norm() < 1e-14);
    }
    SECTION("ellipse a=(1,2) at (0,1) maps to (0,2)") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        const Vec<2> y = gcf::wulff_point<2>(d, Vec<2>(0.0, 1.0));
        REQUIRE(y[0] == Approx(0.0).margin(1e-14));
        REQUIRE(y[1] == Approx(2.0));
    }
    SECTION("ellipsoid points satisfy the ellipsoid equation") {
        const Eigen::Vector3d axes(1.0, 1.0, 2.0);
        const auto d = AnisotropyDescriptor::ellipsoid(axes);
        std::mt19937 rng(31);
        for (int k = 0; k < 200; ++k) {
            const Vec<3> y = gcf::wulff_point<3>(d, random_unit<3>(rng));
            double s = 0.0;
            for (int a = 0; a < 3; ++a) s += y[a] * y[a] / (axes[a] * axes[a]);
            REQUIRE(s == Approx(1.0).margin(1e-8));
        }
    }
    SECTION("Gauss-map consistency: <W(x'), x> <= f(x), equality at x' = x") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        std::mt19937 rng(37);
        for (int k = 0; k < 100; ++k) {
            const Vec<2> x = random_unit<2>(rng);
            const Vec<2> xp = random_unit<2>(rng);
            const double f = gcf::evaluate_support<2>(d, x);
            REQUIRE(gcf::wulff_point<2>(d, xp).dot(x) <= f + 1e-8);
            REQUIRE(gcf::wulff_point<2>(d, x).dot(x) == Approx(f));
        }
    }
    SECTION("wulff sample decomposition: y = f x + tangent gradient") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector3d(1.0, 1.0, 2.0));
        std::mt19937 rng(41);
        for (int k = 0; k < 20; ++k) {
            const auto s = gcf::make_wulff_sample<3>(d, random_unit<3>(rng));
            REQUIRE((s.wulff_point - (s.f_val * s.x + s.grad_tangent)).norm() < 1e-12);
            REQUIRE(std::abs(s.grad_tangent.dot(s.x)) < 1e-12);
        }
    }
}

TEST_CASE("convexity certificate") {
    SECTION("unit sphere: radii exactly one") {
        const auto cert = gcf::convexity_certificate<2>(AnisotropyDescriptor::constant(1.0), 512);
        REQUIRE(cert.lambda_lo == Approx(1.0).margin(1e-12));
        REQUIRE(cert.lambda_hi == Approx(1.0).margin(1e-12));
    }
    SECTION("ellipse a=(1,2): radii range [1/2, 4]") {
        const auto cert =
            gcf::convexity_certificate<2>(AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0)), 20000);
        REQUIRE(cert.lambda_lo == Approx(0.5).margin(1e-4));
        REQUIRE(cert.lambda_hi == Approx(4.0).margin(1e-4));
    }
    SECTION("sign-changing perturbation fails with a witness") {
        AnisotropyDescriptor::LinearTerm term;
        term.direction = Eigen::Vector2d(1.0, 0.0);
        term.amplitude = 2.0;
        const auto d = AnisotropyDescriptor::perturbed(AnisotropyDescriptor::constant(1.0), {term});
        REQUIRE_THROWS_AS(gcf::convexity_certificate<2>(d, 1000), gcf::not_uniformly_convex_error);
        try {
            gcf::convexity_certificate<2>(d, 1000);
        } catch (const gcf::not_uniformly_convex_error& e) {
            REQUIRE(e.witness.size() == 2);
            REQUIRE(e.value <= 0.0);
        }
    }
    SECTION("too few samples violates the precondition") {
        REQUIRE_THROWS_AS(gcf::convexity_certificate<2>(AnisotropyDescriptor::constant(1.0), 5),
                          gcf::precondition_error);
    }
}

TEST_CASE("shift point construction") {
    const Vec<2> e2(0.0, 1.0);
    SECTION("sphere, t0 = 1/2: height of z0 is 1/2") {
        const Vec<2> z0 = gcf::shift_point<2>(AnisotropyDescriptor::constant(1.0), e2, 0.5);
        REQUIRE(z0.dot(e2) == Approx(0.5).margin(1e-9));
        const double margin =
            gcf::verify_shift_property<2>(AnisotropyDescriptor::constant(1.0), z0, e2, 40000);
        REQUIRE(margin <= 1e-10);
    }
    SECTION("sphere, z0 = 0: margin 0 attained on the equator") {
        const double margin =
            gcf::verify_shift_property<2>(AnisotropyDescriptor::constant(1.0), Vec<2>::Zero(), e2, 10000);
        REQUIRE(margin == Approx(0.0).margin(1e-13));
    }
    SECTION("sphere, z0 = e2/2: margin -1/2") {
        const double margin = gcf::verify_shift_property<2>(AnisotropyDescriptor::constant(1.0),
                                                            Vec<2>(0.0, 0.5), e2, 10000);
        REQUIRE(margin == Approx(-0.5).margin(1e-13));
    }
    SECTION("shifted sphere: the center itself satisfies the property") {
        const Eigen::Vector2d c(0.2, -0.3);
        const auto d = AnisotropyDescriptor::shifted_sphere(c, 1.0);
        const double margin = gcf::verify_shift_property<2>(d, Vec<2>(c), e2, 10000);
        REQUIRE(margin <= 1e-12);
        const Vec<2> z0 = gcf::shift_point<2>(d, e2, 0.5);
        REQUIRE(gcf::verify_shift_property<2>(d, z0, e2, 40000) <= 1e-10);
    }
    SECTION("ellipsoid (1,1,2) in R^3") {
        const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector3d(1.0, 1.0, 2.0));
        const Vec<3> e3(0.0, 0.0, 1.0);
        const Vec<3> z0 = gcf::shift_point<3>(d, e3, 0.5, 10000);
        REQUIRE(gcf::verify_shift_property<3>(d, z0, e3, 100000) <= 1e-10);
    }
    SECTION("randomized directions across the built-in families") {
        std::mt19937 rng(43);
        const auto ellipse2 = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
        const auto sphere2 = AnisotropyDescriptor::shifted_sphere(Eigen::Vector2d(0.1, 0.2), 1.0);
        for (int k = 0; k < 10; ++k) {
            const Vec<2> e = random_unit<2>(rng);
            for (const auto& d : {ellipse2, sphere2}) {
                const Vec<2> z0 = gcf::shift_point<2>(d, e, 0.5);
                REQUIRE(gcf::verify_shift_property<2>(d, z0, e, 40000) <= 1e-8);
            }
        }
        const auto ellipsoid3 = AnisotropyDescriptor::ellipsoid(Eigen::Vector3d(1.0, 1.0, 2.0));
        for (int k = 0; k < 5; ++k) {
            const Vec<3> e = random_unit<3>(rng);
            const Vec<3> z0 = gcf::shift_point<3>(ellipsoid3, e, 0.5, 4000);
            REQUIRE(gcf::verify_shift_property<3>(ellipsoid3, z0, e, 40000) <= 1e-8);
        }
    }
    SECTION("z0 outside the body is rejected") {
        REQUIRE_THROWS_AS(gcf::verify_shift_property<2>(AnisotropyDescriptor::constant(1.0),
                                                        Vec<2>(2.0, 0.0), e2, 1000),
                          gcf::invalid_argument_error);
    }
    SECTION("t0 must lie strictly inside (0,1)") {
        REQUIRE_THROWS_AS(gcf::shift_point<2>(AnisotropyDescriptor::constant(1.0), e2, 1.0),
                          gcf::precondition_error);
    }
}

TEST_CASE("height maximum sits at the prescribed normal") {
    // The sampled argmax of <W(x), e> over the whole sphere must be within
    // lattice resolution of x = e.
    const auto d = AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0));
    std::mt19937 rng(47);
    const Vec<2> e = random_unit<2>(rng);
    double best = -1e300;
    Vec<2> arg = Vec<2>::Zero();
    for (const Vec<2>& x : gcf::sphere_lattice<2>(4096)) {
        const double v = gcf::wulff_point<2>(d, x).dot(e);
        if (v > best) {
            best = v;
            arg = x;
        }
    }
    const double angle = std::acos(std::clamp(arg.dot(e), -1.0, 1.0));
    REQUIRE(angle < 2.0 * 2.0 * std::numbers::pi / 4096);
}
