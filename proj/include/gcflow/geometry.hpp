#ifndef GCFLOW_GEOMETRY_HPP
#define GCFLOW_GEOMETRY_HPP

#include <cmath>
#include <limits>
#include <type_traits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "gcflow/anisotropy.hpp"
#include "gcflow/errors.hpp"
#include "gcflow/grid.hpp"

namespace gcf {

/// Per-point differential data of the graph (x, u(x)):
///   upsilon  = sqrt(1 + |Du|^2) = -<nu, e_{n+1}>^{-1}
///   nu       = (Du, -1) / upsilon   (outward normal of the convex hull)
///   g        = I + Du Du^T
///   h        = D2u / upsilon
///   K        = det(D2u) / (1 + |Du|^2)^{(n+2)/2}
///   H        = trace(g^{-1} h)
///   lambda_min = smallest eigenvalue of the shape operator g^{-1} h
template <int N>
struct PointGeometry {
    Vec<N> Du = Vec<N>::Zero();
    Mat<N> D2u = Mat<N>::Zero();
    double upsilon = 1.0;
    Vec<N + 1> normal = Vec<N + 1>::Zero();
    Mat<N> metric = Mat<N>::Identity();
    Mat<N> second_form = Mat<N>::Zero();
    double gauss = 0.0;
    double mean = 0.0;
    double lambda_min = 0.0;
};

/// Cell-aligned scalar field; `defined` marks cells where the value exists.
template <int N>
struct CellField {
    std::vector<double> value;
    std::vector<std::uint8_t> defined;

    explicit CellField(long cells = 0)
        : value(static_cast<std::size_t>(cells), std::numeric_limits<double>::quiet_NaN()),
          defined(static_cast<std::size_t>(cells), 0) {}

    void set(long cell, double v) {
        value[static_cast<std::size_t>(cell)] = v;
        defined[static_cast<std::size_t>(cell)] = 1;
    }
    bool has(long cell) const { return defined[static_cast<std::size_t>(cell)] != 0; }
    double at(long cell) const { return value[static_cast<std::size_t>(cell)]; }
};

namespace detail {

// Smallest eigenvalue of D2u; closed forms for n <= 2.
template <int N>
double d2u_lambda_min(const Mat<N>& m) {
    if constexpr (N == 1) {
        return m(0, 0);
    } else {
        return sym_eig_range<2>(m).first;
    }
}

template <int N>
Vec<N> central_gradient(const GraphGrid<N>& g, const std::type_identity_t<Index<N>>& idx) {
    Vec<N> grad;
    const double inv2h = 1.0 / (2.0 * g.spacing);
    for (int a = 0; a < N; ++a) {
        Index<N> p = idx, m = idx;
        ++p[a];
        --m[a];
        grad[a] = (g.value(p) - g.value(m)) * inv2h;
    }
    return grad;
}

template <int N>
Mat<N> central_hessian(const GraphGrid<N>& g, const std::type_identity_t<Index<N>>& idx) {
    Mat<N> hess;
    const double invh2 = 1.0 / (g.spacing * g.spacing);
    for (int a = 0; a < N; ++a) {
        Index<N> p = idx, m = idx;
        ++p[a];
        --m[a];
        hess(a, a) = (g.value(p) - 2.0 * g.value(idx) + g.value(m)) * invh2;
    }
    if constexpr (N == 2) {
        Index<2> pp = idx, pm = idx, mp = idx, mm = idx;
        ++pp[0]; ++pp[1];
        ++pm[0]; --pm[1];
        --mp[0]; ++mp[1];
        --mm[0]; --mm[1];
        const double v = (g.value(pp) - g.value(pm) - g.value(mp) + g.value(mm)) * 0.25 * invh2;
        hess(0, 1) = hess(1, 0) = v;
    }
    return hess;
}

}  // namespace detail

/// Second-order central differences plus all derived pointwise fields.
/// Requires a full stencil neighborhood; throws convexity_loss_error when
/// det D2u <= 0 (smallest eigenvalue of D2u nonpositive).
template <int N>
PointGeometry<N> differentials(const GraphGrid<N>& grid, const std::type_identity_t<Index<N>>& idx) {
    if (!grid.is_interior(idx)) {
        throw precondition_error("differentials: cell is not interior to the active mask");
    }
    PointGeometry<N> p;
    p.Du = detail::central_gradient(grid, idx);
    p.D2u = detail::central_hessian(grid, idx);
    if (!(detail::d2u_lambda_min<N>(p.D2u) > 0.0)) {
        throw convexity_loss_error("convexity lost: det D2u <= 0 at cell " +
                                       std::to_string(grid.linear(idx)),
                                   grid.linear(idx), grid.time);
    }
    const double du2 = p.Du.squaredNorm();
    p.upsilon = std::sqrt(1.0 + du2);
    p.normal.template head<N>() = p.Du / p.upsilon;
    p.normal[N] = -1.0 / p.upsilon;
    p.metric = Mat<N>::Identity() + p.Du * p.Du.transpose();
    p.second_form = p.D2u / p.upsilon;
    p.gauss = p.D2u.determinant() / std::pow(1.0 + du2, 0.5 * (N + 2));
    const Mat<N> g_inv = Mat<N>::Identity() - p.Du * p.Du.transpose() / (1.0 + du2);
    const Mat<N> shape = g_inv * p.second_form;
    p.mean = shape.trace();
    if constexpr (N == 1) {
        p.lambda_min = shape(0, 0);
    } else {
        // Eigenvalues of g^{-1} h from the invariants H and K.
        const double disc = std::sqrt(std::max(0.0, p.mean * p.mean - 4.0 * p.gauss));
        p.lambda_min = 0.5 * (p.mean - disc);
    }
    return p;
}

/// Gradient function upsilon = sqrt(1 + |Du|^2) at every interior cell.
template <int N>
CellField<N> gradient_function_field(const GraphGrid<N>& grid) {
    CellField<N> field(grid.cell_count());
    for (long c = 0; c < grid.cell_count(); ++c) {
        const Index<N> idx = grid.unlinear(c);
        if (!grid.is_interior(idx)) continue;
        field.set(c, differentials(grid, idx).upsilon);
    }
    return field;
}

/// Cut-off field psi_beta = max(N - beta*t - u, 0) on active cells.
template <int N>
CellField<N> cutoff_field(const GraphGrid<N>& grid, double height_bound, double beta, double t) {
    if (!(height_bound > 0.0)) throw precondition_error("cutoff_field: N must be positive");
    CellField<N> field(grid.cell_count());
    for (long c = 0; c < grid.cell_count(); ++c) {
        if (!grid.active[static_cast<std::size_t>(c)]) continue;
        field.set(c, std::max(height_bound - beta * t - grid.u[static_cast<std::size_t>(c)], 0.0));
    }
    return field;
}

/// Flow speed from first and second derivatives, in the graph form
///   rho(Du) * det(D2u)^alpha / (1 + |Du|^2)^{(alpha(n+2)-1)/2},
/// where rho(Du) = f((Du, -1)/sqrt(1+|Du|^2)).
template <int N>
double speed_from_derivatives(const AnisotropyDescriptor& desc, double alpha, const Vec<N>& Du,
                              const Mat<N>& D2u, long cell = -1, double time = 0.0) {
    const double det = D2u.determinant();
    if (!(detail::d2u_lambda_min<N>(D2u) > 0.0)) {
        throw convexity_loss_error("convexity lost: det D2u <= 0", cell, time);
    }
    const double du2 = Du.squaredNorm();
    const double ups = std::sqrt(1.0 + du2);
    Vec<N + 1> nu;
    nu.template head<N>() = Du / ups;
    nu[N] = -1.0 / ups;
    const double rho = evaluate_support<N + 1>(desc, nu);
    return rho * std::pow(det, alpha) / std::pow(1.0 + du2, 0.5 * (alpha * (N + 2) - 1.0));
}

/// Algebraically equivalent route f(nu) K^alpha upsilon, used as the
/// cross-check against speed_from_derivatives.
template <int N>
double speed_identity_value(const AnisotropyDescriptor& desc, double alpha,
                            const PointGeometry<N>& p) {
    const double f = evaluate_support<N + 1>(desc, p.normal);
    return f * std::pow(p.gauss, alpha) * p.upsilon;
}

/// Flow speed at every interior cell.
template <int N>
CellField<N> speed_field(const GraphGrid<N>& grid, const AnisotropyDescriptor& desc, double alpha) {
    CellField<N> field(grid.cell_count());
    for (long c = 0; c < grid.cell_count(); ++c) {
        const Index<N> idx = grid.unlinear(c);
        if (!grid.is_interior(idx)) continue;
        const Vec<N> Du = detail::central_gradient(grid, idx);
        const Mat<N> D2u = detail::central_hessian(grid, idx);
        field.set(c, speed_from_derivatives<N>(desc, alpha, Du, D2u, c, grid.time));
    }
    return field;
}

}  // namespace gcf

#endif  // GCFLOW_GEOMETRY_HPP
