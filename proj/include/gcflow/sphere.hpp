#ifndef GCFLOW_SPHERE_HPP
#define GCFLOW_SPHERE_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "gcflow/errors.hpp"

namespace gcf {

template <int M>
using Vec = Eigen::Matrix<double, M, 1>;

template <int M>
using Mat = Eigen::Matrix<double, M, M>;

/// Quasi-uniform sample of the unit sphere S^{M-1}: uniform angles on S^1,
/// Fibonacci lattice on S^2. Deterministic ordering.
template <int M>
std::vector<Vec<M>> sphere_lattice(int count);

template <>
inline std::vector<Vec<2>> sphere_lattice<2>(int count) {
    std::vector<Vec<2>> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / count;
        pts.emplace_back(std::cos(phi), std::sin(phi));
    }
    return pts;
}

template <>
inline std::vector<Vec<3>> sphere_lattice<3>(int count) {
    std::vector<Vec<3>> pts;
    pts.reserve(static_cast<std::size_t>(count));
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * k;
        pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return pts;
}

/// Deterministic orthonormal basis of the tangent space x^perp.
template <int M>
std::array<Vec<M>, M - 1> tangent_basis(const Vec<M>& x);

template <>
inline std::array<Vec<2>, 1> tangent_basis<2>(const Vec<2>& x) {
    return {Vec<2>(-x[1], x[0])};
}

template <>
inline std::array<Vec<3>, 2> tangent_basis<3>(const Vec<3>& x) {
    int smallest = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(x[i]) < std::abs(x[smallest])) smallest = i;
    }
    Vec<3> t1 = Vec<3>::Unit(smallest) - x[smallest] * x;
    t1.normalize();
    const Vec<3> t2 = x.cross(t1);
    return {t1, t2};
}

/// Points on the great circle { y : <y, axis> = 0 }, uniform in angle.
template <int M>
std::vector<Vec<M>> equator_ring(const Vec<M>& axis, int count) {
    const auto basis = tangent_basis<M>(axis);
    std::vector<Vec<M>> pts;
    if constexpr (M == 2) {
        pts.push_back(basis[0]);
        pts.push_back(-basis[0]);
        (void)count;
    } else {
        pts.reserve(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / count;
            pts.push_back(std::cos(phi) * basis[0] + std::sin(phi) * basis[1]);
        }
    }
    return pts;
}

inline void require_unit(const Eigen::Ref<const Eigen::VectorXd>& x, const char* who) {
    if (std::abs(x.norm() - 1.0) > 1e-12) {
        throw precondition_error(std::string(who) + ": direction must be a unit vector");
    }
}

}  // namespace gcf

#endif  // GCFLOW_SPHERE_HPP
