#ifndef GCFLOW_ANISOTROPY_HPP
#define GCFLOW_ANISOTROPY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "gcflow/errors.hpp"
#include "gcflow/sphere.hpp"

namespace gcf {

/// Closed-form family defining the support function f on the unit sphere.
///
/// The Wulff shape is recovered from f through the 1-homogeneous extension
/// F(xi) = |xi| f(xi/|xi|): the ambient gradient of F at a unit direction x
/// is the boundary point whose outer normal is x, and the ambient Hessian
/// restricted to the tangent space of the sphere is the matrix of principal
/// curvature radii.
struct AnisotropyDescriptor {
    enum class Family { constant, shifted_sphere, ellipsoid, perturbed };

    struct LinearTerm {
        Eigen::VectorXd direction;
        double amplitude = 0.0;
    };

    Family family = Family::constant;
    double value = 1.0;                  // constant
    Eigen::VectorXd center;              // shifted_sphere
    double radius = 1.0;                 // shifted_sphere
    Eigen::VectorXd axes;                // ellipsoid
    std::shared_ptr<const AnisotropyDescriptor> base;  // perturbed
    std::vector<LinearTerm> terms;                     // perturbed

    // Step for central differences on the 1-homogeneous extension when
    // analytic derivatives are unavailable (or forced off for testing).
    double fd_step = 1e-5;
    bool numeric_derivatives = false;

    static AnisotropyDescriptor constant(double c) {
        AnisotropyDescriptor d;
        d.family = Family::constant;
        d.value = c;
        return d;
    }

    static AnisotropyDescriptor shifted_sphere(Eigen::VectorXd c, double r) {
        AnisotropyDescriptor d;
        d.family = Family::shifted_sphere;
        d.center = std::move(c);
        d.radius = r;
        return d;
    }

    static AnisotropyDescriptor ellipsoid(Eigen::VectorXd semiaxes) {
        AnisotropyDescriptor d;
        d.family = Family::ellipsoid;
        d.axes = std::move(semiaxes);
        return d;
    }

    static AnisotropyDescriptor perturbed(AnisotropyDescriptor base_desc,
                                          std::vector<LinearTerm> linear_terms) {
        AnisotropyDescriptor d;
        d.family = Family::perturbed;
        d.base = std::make_shared<AnisotropyDescriptor>(std::move(base_desc));
        d.terms = std::move(linear_terms);
        return d;
    }

    /// Ambient dimension fixed by the parameters; 0 when any dimension fits.
    int ambient_dim() const {
        switch (family) {
            case Family::constant:
                return 0;
            case Family::shifted_sphere:
                return static_cast<int>(center.size());
            case Family::ellipsoid:
                return static_cast<int>(axes.size());
            case Family::perturbed: {
                int d = base ? base->ambient_dim() : 0;
                for (const auto& t : terms) {
                    if (d == 0) d = static_cast<int>(t.direction.size());
                }
                return d;
            }
        }
        return 0;
    }
};

/// Value, ambient gradient and ambient Hessian of the 1-homogeneous
/// extension at a unit direction.
template <int M>
struct SupportJet {
    double value = 0.0;
    Vec<M> gradient = Vec<M>::Zero();
    Mat<M> hessian = Mat<M>::Zero();
};

template <int M>
struct WulffSample {
    Vec<M> x;
    double f_val;
    Vec<M> grad_tangent;
    Eigen::Matrix<double, M - 1, M - 1> radii;
    Vec<M> wulff_point;
};

struct ConvexityCertificate {
    double lambda_lo;
    double lambda_hi;
};

struct AnisotropyStats {
    double f_min;
    double f_max;
    double sup_grad_logf_sq;
};

namespace detail {

template <int M>
void validate_descriptor(const AnisotropyDescriptor& d) {
    using Family = AnisotropyDescriptor::Family;
    const int dim = d.ambient_dim();
    if (dim != 0 && dim != M) {
        throw invalid_descriptor_error("descriptor dimension " + std::to_string(dim) +
                                       " does not match ambient dimension " + std::to_string(M));
    }
    switch (d.family) {
        case Family::constant:
            if (!(d.value > 0.0)) throw invalid_descriptor_error("constant support value must be positive");
            break;
        case Family::shifted_sphere:
            if (!(d.radius > 0.0)) throw invalid_descriptor_error("sphere radius must be positive");
            if (d.center.size() != M) throw invalid_descriptor_error("sphere center has wrong dimension");
            break;
        case Family::ellipsoid:
            if (d.axes.size() != M) throw invalid_descriptor_error("ellipsoid needs one semiaxis per ambient coordinate");
            for (int i = 0; i < M; ++i) {
                if (!(d.axes[i] > 0.0)) throw invalid_descriptor_error("ellipsoid semiaxes must be positive");
            }
            break;
        case Family::perturbed:
            if (!d.base) throw invalid_descriptor_error("perturbed descriptor needs a base");
            validate_descriptor<M>(*d.base);
            for (const auto& t : d.terms) {
                if (t.direction.size() != M) throw invalid_descriptor_error("linear term has wrong dimension");
            }
            break;
    }
    if (!(d.fd_step > 0.0)) throw invalid_descriptor_error("fd_step must be positive");
}

// Support value at a unit direction without the positivity check; the
// certificate uses this to report sign failures as convexity failures.
template <int M>
double support_raw(const AnisotropyDescriptor& d, const Vec<M>& x) {
    using Family = AnisotropyDescriptor::Family;
    switch (d.family) {
        case Family::constant:
            return d.value;
        case Family::shifted_sphere:
            return d.radius + d.center.dot(x);
        case Family::ellipsoid: {
            double s = 0.0;
            for (int i = 0; i < M; ++i) s += d.axes[i] * d.axes[i] * x[i] * x[i];
            return std::sqrt(s);
        }
        case Family::perturbed: {
            double s = support_raw<M>(*d.base, x);
            for (const auto& t : d.terms) s += t.amplitude * t.direction.dot(x);
            return s;
        }
    }
    return 0.0;
}

// 1-homogeneous extension at an arbitrary nonzero point.
template <int M>
double extension_value(const AnisotropyDescriptor& d, const Vec<M>& xi) {
    const double r = xi.norm();
    const Vec<M> u = xi / r;
    return r * support_raw<M>(d, u);
}

template <int M>
SupportJet<M> numeric_jet(const AnisotropyDescriptor& d, const Vec<M>& x) {
    const double s = d.fd_step;
    SupportJet<M> jet;
    jet.value = support_raw<M>(d, x);
    const double f0 = jet.value;
    for (int i = 0; i < M; ++i) {
        Vec<M> xp = x, xm = x;
        xp[i] += s;
        xm[i] -= s;
        const double fp = extension_value<M>(d, xp);
        const double fm = extension_value<M>(d, xm);
        jet.gradient[i] = (fp - fm) / (2.0 * s);
        jet.hessian(i, i) = (fp - 2.0 * f0 + fm) / (s * s);
    }
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            Vec<M> xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += s; xpp[j] += s;
            xpm[i] += s; xpm[j] -= s;
            xmp[i] -= s; xmp[j] += s;
            xmm[i] -= s; xmm[j] -= s;
            const double v = (extension_value<M>(d, xpp) - extension_value<M>(d, xpm) -
                              extension_value<M>(d, xmp) + extension_value<M>(d, xmm)) /
                             (4.0 * s * s);
            jet.hessian(i, j) = v;
            jet.hessian(j, i) = v;
        }
    }
    return jet;
}

template <int M>
SupportJet<M> analytic_jet(const AnisotropyDescriptor& d, const Vec<M>& x) {
    using Family = AnisotropyDescriptor::Family;
    SupportJet<M> jet;
    switch (d.family) {
        case Family::constant:
            jet.value = d.value;
            jet.gradient = d.value * x;
            jet.hessian = d.value * (Mat<M>::Identity() - x * x.transpose());
            break;
        case Family::shifted_sphere: {
            jet.value = d.radius + d.center.dot(x);
            jet.gradient = d.radius * x + d.center;
            jet.hessian = d.radius * (Mat<M>::Identity() - x * x.transpose());
            break;
        }
        case Family::ellipsoid: {
            const Vec<M> a2 = d.axes.array().square();
            const double f = std::sqrt((a2.array() * x.array().square()).sum());
            jet.value = f;
            jet.gradient = (a2.array() * x.array()).matrix() / f;
            jet.hessian = a2.asDiagonal();
            jet.hessian /= f;
            jet.hessian -= jet.gradient * jet.gradient.transpose() / f;
            break;
        }
        case Family::perturbed: {
            jet = analytic_jet<M>(*d.base, x);
            for (const auto& t : d.terms) {
                const Vec<M> w = t.amplitude * Vec<M>(t.direction);
                jet.value += w.dot(x);
                jet.gradient += w;
            }
            break;
        }
    }
    return jet;
}

// Eigenvalue range of a symmetric matrix, closed form for sizes 1 and 2.
template <int K>
std::pair<double, double> sym_eig_range(const Eigen::Matrix<double, K, K>& m) {
    if constexpr (K == 1) {
        return {m(0, 0), m(0, 0)};
    } else {
        static_assert(K == 2);
        const double mean = 0.5 * (m(0, 0) + m(1, 1));
        const double off = 0.5 * (m(0, 0) - m(1, 1));
        const double disc = std::sqrt(off * off + m(0, 1) * m(1, 0));
        return {mean - disc, mean + disc};
    }
}

// Golden-section search for a maximum of a smooth function on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

/// Support function f(x) of the Wulff shape at a unit direction.
template <int M>
double evaluate_support(const AnisotropyDescriptor& desc, const Vec<M>& x) {
    detail::validate_descriptor<M>(desc);
    require_unit(x, "evaluate_support");
    const double f = detail::support_raw<M>(desc, x);
    if (!(f > 0.0)) {
        throw invalid_descriptor_error("support function is not positive at a sampled direction");
    }
    return f;
}

/// Ambient gradient and Hessian of the 1-homogeneous extension at a unit x.
/// The gradient satisfies <gradient, x> = f(x) and hessian * x = 0.
template <int M>
SupportJet<M> homogeneous_derivatives(const AnisotropyDescriptor& desc, const Vec<M>& x) {
    detail::validate_descriptor<M>(desc);
    require_unit(x, "homogeneous_derivatives");
    return desc.numeric_derivatives ? detail::numeric_jet<M>(desc, x)
                                    : detail::analytic_jet<M>(desc, x);
}

/// Boundary point of the Wulff shape whose outer normal is x.
template <int M>
Vec<M> wulff_point(const AnisotropyDescriptor& desc, const Vec<M>& x) {
    return homogeneous_derivatives<M>(desc, x).gradient;
}

/// Restriction of the extension Hessian to an orthonormal tangent basis at x;
/// equals the matrix of principal curvature radii of the Wulff shape.
template <int M>
Eigen::Matrix<double, M - 1, M - 1> radii_matrix(const AnisotropyDescriptor& desc, const Vec<M>& x,
                                                 const std::array<Vec<M>, M - 1>& basis) {
    detail::validate_descriptor<M>(desc);
    require_unit(x, "radii_matrix");
    for (int a = 0; a < M - 1; ++a) {
        if (std::abs(basis[a].norm() - 1.0) > 1e-10 || std::abs(basis[a].dot(x)) > 1e-10) {
            throw precondition_error("radii_matrix: basis must be orthonormal and orthogonal to x");
        }
        for (int b = a + 1; b < M - 1; ++b) {
            if (std::abs(basis[a].dot(basis[b])) > 1e-10) {
                throw precondition_error("radii_matrix: basis must be orthonormal and orthogonal to x");
            }
        }
    }
    const SupportJet<M> jet = homogeneous_derivatives<M>(desc, x);
    Eigen::Matrix<double, M - 1, M - 1> r;
    for (int a = 0; a < M - 1; ++a) {
        for (int b = 0; b < M - 1; ++b) {
            r(a, b) = basis[a].dot(jet.hessian * basis[b]);
        }
    }
    // Symmetrize away roundoff.
    r = (0.5 * (r + r.transpose())).eval();
    return r;
}

template <int M>
WulffSample<M> make_wulff_sample(const AnisotropyDescriptor& desc, const Vec<M>& x) {
    const auto basis = tangent_basis<M>(x);
    WulffSample<M> s;
    s.x = x;
    const SupportJet<M> jet = homogeneous_derivatives<M>(desc, x);
    s.f_val = jet.value;
    s.wulff_point = jet.gradient;
    s.grad_tangent = jet.gradient - jet.value * x;
    s.radii = radii_matrix<M>(desc, x, basis);
    return s;
}

/// Min/max eigenvalue of the radii matrix over a quasi-uniform sample.
/// Throws not_uniformly_convex_error (with the witness direction) when the
/// support function fails positivity or lambda_lo <= 1e-6.
template <int M>
ConvexityCertificate convexity_certificate(const AnisotropyDescriptor& desc, int sample_count) {
    detail::validate_descriptor<M>(desc);
    if (sample_count < 10) {
        throw precondition_error("convexity_certificate: need at least 10 samples");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Vec<M>& x : sphere_lattice<M>(sample_count)) {
        const double f = detail::support_raw<M>(desc, x);
        if (!(f > 0.0)) {
            throw not_uniformly_convex_error("support function is not positive", x, f);
        }
        const auto basis = tangent_basis<M>(x);
        const auto r = radii_matrix<M>(desc, x, basis);
        const auto [rlo, rhi] = detail::sym_eig_range<M - 1>(r);
        if (rlo <= 1e-6) {
            throw not_uniformly_convex_error("radii matrix is not uniformly positive definite", x, rlo);
        }
        lo = std::min(lo, rlo);
        hi = std::max(hi, rhi);
    }
    return {lo, hi};
}

/// Range of f and sup |grad log f|^2 over the sphere, by dense sampling
/// (exact for constant descriptors).
template <int M>
AnisotropyStats anisotropy_stats(const AnisotropyDescriptor& desc, int sample_count = 8192) {
    detail::validate_descriptor<M>(desc);
    if (desc.family == AnisotropyDescriptor::Family::constant) {
        return {desc.value, desc.value, 0.0};
    }
    AnisotropyStats st{std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity(), 0.0};
    for (const Vec<M>& x : sphere_lattice<M>(sample_count)) {
        const SupportJet<M> jet = homogeneous_derivatives<M>(desc, x);
        if (!(jet.value > 0.0)) {
            throw invalid_descriptor_error("support function is not positive at a sampled direction");
        }
        st.f_min = std::min(st.f_min, jet.value);
        st.f_max = std::max(st.f_max, jet.value);
        const Vec<M> gt = jet.gradient - jet.value * x;
        st.sup_grad_logf_sq = std::max(st.sup_grad_logf_sq, gt.squaredNorm() / (jet.value * jet.value));
    }
    return st;
}

/// Largest height <wulff_point(x), e> over the closed hemisphere {<x,e> <= 0},
/// with the maximizing direction. Dense sampling plus 1D/2D local refinement.
template <int M>
std::pair<Vec<M>, double> lower_hemisphere_height_argmax(const AnisotropyDescriptor& desc,
                                                         const Vec<M>& e_dir, int sample_count) {
    const auto height = [&](const Vec<M>& x) { return wulff_point<M>(desc, x).dot(e_dir); };

    if constexpr (M == 2) {
        const double theta = std::atan2(e_dir[1], e_dir[0]);
        const double lo = theta + 0.5 * std::numbers::pi;
        const double hi = theta + 1.5 * std::numbers::pi;
        const auto at = [&](double phi) { return Vec<2>(std::cos(phi), std::sin(phi)); };
        const auto g = [&](double phi) { return height(at(phi)); };
        int best = 0;
        double best_val = -std::numeric_limits<double>::infinity();
        const int n = sample_count;
        for (int k = 0; k <= n; ++k) {
            const double phi = lo + (hi - lo) * k / n;
            const double v = g(phi);
            if (v > best_val) {
                best_val = v;
                best = k;
            }
        }
        const double step = (hi - lo) / n;
        const double a = std::max(lo, lo + (best - 1) * step);
        const double b = std::min(hi, lo + (best + 1) * step);
        const double phi_star = detail::golden_max(g, a, b, 1e-10);
        const Vec<2> x0 = at(phi_star);
        // The refined bracket interior can miss a maximum sitting exactly on
        // an endpoint; keep whichever is higher.
        if (g(phi_star) >= best_val) return {x0, g(phi_star)};
        const Vec<2> xs = at(lo + best * step);
        return {xs, best_val};
    } else {
        static_assert(M == 3);
        Vec<3> best_x = -e_dir;
        double best_val = -std::numeric_limits<double>::infinity();
        for (const Vec<3>& x : sphere_lattice<3>(sample_count)) {
            if (x.dot(e_dir) > 0.0) continue;
            const double v = height(x);
            if (v > best_val) {
                best_val = v;
                best_x = x;
            }
        }
        const int ring_n = std::max(64, sample_count / 4);
        int best_ring = -1;
        for (int k = 0; k < ring_n; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / ring_n;
            const auto basis = tangent_basis<3>(e_dir);
            const Vec<3> x = std::cos(phi) * basis[0] + std::sin(phi) * basis[1];
            const double v = height(x);
            if (v > best_val) {
                best_val = v;
                best_x = x;
                best_ring = k;
            }
        }

        // Local quadratic-fit refinement on a tangent chart, projected back to
        // the feasible hemisphere after each step.
        Vec<3> x = best_x;
        double val = best_val;
        const double fd = 1e-5;
        bool at_boundary = false;
        const int max_iters = 100;
        int it = 0;
        for (; it < max_iters; ++it) {
            const auto basis = tangent_basis<3>(x);
            const auto chart = [&](double a, double b) {
                Vec<3> y = x + a * basis[0] + b * basis[1];
                y.normalize();
                return y;
            };
            const double f00 = height(x);
            const double fpa = height(chart(fd, 0)), fma = height(chart(-fd, 0));
            const double fpb = height(chart(0, fd)), fmb = height(chart(0, -fd));
            const double fab = height(chart(fd, fd)), famb = height(chart(fd, -fd));
            const double fmab = height(chart(-fd, fd)), fmamb = height(chart(-fd, -fd));
            Eigen::Vector2d grad((fpa - fma) / (2 * fd), (fpb - fmb) / (2 * fd));
            Eigen::Matrix2d hess;
            hess(0, 0) = (fpa - 2 * f00 + fma) / (fd * fd);
            hess(1, 1) = (fpb - 2 * f00 + fmb) / (fd * fd);
            hess(0, 1) = hess(1, 0) = (fab - famb - fmab + fmamb) / (4 * fd * fd);
            Eigen::Vector2d delta;
            const double det = hess.determinant();
            if (det > 0.0 && hess(0, 0) < 0.0) {
                delta = -hess.inverse() * grad;  // Newton step toward the fitted max
            } else {
                delta = grad;  // fall back to gradient ascent
            }
            const double max_step = 0.05;
            if (delta.norm() > max_step) delta *= max_step / delta.norm();
            Vec<3> next = x + delta[0] * basis[0] + delta[1] * basis[1];
            next.normalize();
            if (next.dot(e_dir) > 0.0) {
                next -= next.dot(e_dir) * e_dir;
                const double nn = next.norm();
                if (nn < 1e-14) break;
                next /= nn;
                at_boundary = true;
            }
            const double next_val = height(next);
            if (next_val <= val + 1e-16) break;
            const double moved = (next - x).norm();
            x = next;
            val = next_val;
            if (moved < 1e-10) break;
        }
        if (it == max_iters) {
            throw numerical_failure_error("shift_point: hemisphere argmax refinement did not converge");
        }

        // Polish along the equator: for a certified convex shape the
        // constrained maximizer lies on {<x,e> = 0} whenever the global
        // height maximizer has <x,e> > 0.
        if (at_boundary || best_ring >= 0 || std::abs(x.dot(e_dir)) < 1e-6) {
            const auto basis = tangent_basis<3>(e_dir);
            Vec<3> xe = x - x.dot(e_dir) * e_dir;
            if (xe.norm() > 1e-14) {
                xe.normalize();
                const double phi0 = std::atan2(xe.dot(basis[1]), xe.dot(basis[0]));
                const auto ring = [&](double phi) {
                    return height(std::cos(phi) * basis[0] + std::sin(phi) * basis[1]);
                };
                const double w = 2.0 * std::numbers::pi / ring_n + 1e-3;
                const double phi_star = detail::golden_max(ring, phi0 - w, phi0 + w, 1e-10);
                const Vec<3> cand = std::cos(phi_star) * basis[0] + std::sin(phi_star) * basis[1];
                if (height(cand) > val) {
                    x = cand;
                    val = height(cand);
                }
            }
        }
        return {x, val};
    }
}

/// Interior point z0 of the Wulff body such that the support function taken
/// with respect to z0 has nonpositive e-height over the lower hemisphere of
/// normals: z0 = t0 * y1 + (1 - t0) * y0 with y1 the global height maximizer
/// and y0 the height maximizer over {<x, e> <= 0}.
template <int M>
Vec<M> shift_point(const AnisotropyDescriptor& desc, const Vec<M>& e_dir, double t0 = 0.5,
                   int sample_count = 10000) {
    detail::validate_descriptor<M>(desc);
    require_unit(e_dir, "shift_point");
    if (!(t0 > 0.0 && t0 < 1.0)) {
        throw precondition_error("shift_point: t0 must lie in (0,1)");
    }
    convexity_certificate<M>(desc, 2048);
    const Vec<M> y1 = wulff_point<M>(desc, e_dir);
    const auto [x0, h0] = lower_hemisphere_height_argmax<M>(desc, e_dir, sample_count);
    const Vec<M> y0 = wulff_point<M>(desc, x0);
    return t0 * y1 + (1.0 - t0) * y0;
}

/// Max over sampled normals x with <x, e> <= 0 of <wulff_point(x) - z0, e>.
/// The shift property holds iff the returned margin is <= 0 (up to tolerance).
template <int M>
double verify_shift_property(const AnisotropyDescriptor& desc, const Vec<M>& z0,
                             const Vec<M>& e_dir, int samples) {
    detail::validate_descriptor<M>(desc);
    require_unit(e_dir, "verify_shift_property");

    auto pts = sphere_lattice<M>(samples);
    const auto ring = equator_ring<M>(e_dir, std::max(64, samples / 4));
    pts.insert(pts.end(), ring.begin(), ring.end());

    // z0 must be strictly inside the body: <z0, x> < f(x) for all samples.
    for (const Vec<M>& x : pts) {
        if (z0.dot(x) >= detail::support_raw<M>(desc, x)) {
            throw invalid_argument_error("verify_shift_property: z0 is not strictly inside the Wulff body");
        }
    }
    double margin = -std::numeric_limits<double>::infinity();
    for (const Vec<M>& x : pts) {
        if (x.dot(e_dir) > 1e-14) continue;
        margin = std::max(margin, (wulff_point<M>(desc, x) - z0).dot(e_dir));
    }
    return margin;
}

}  // namespace gcf

#endif  // GCFLOW_ANISOTROPY_HPP
