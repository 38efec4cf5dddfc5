#ifndef GCFLOW_ERRORS_HPP
#define GCFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gcf {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// A documented precondition of an operation was violated by the caller.
class precondition_error : public error {
public:
    using error::error;
};

/// Descriptor parameters are malformed (zero axis, nonpositive radius,
/// support function not positive, ...).
class invalid_descriptor_error : public error {
public:
    using error::error;
};

/// The sampled radii matrix failed uniform convexity. Carries the witness
/// direction where the failure was observed.
class not_uniformly_convex_error : public error {
public:
    not_uniformly_convex_error(const std::string& what, Eigen::VectorXd witness_dir,
                               double witness_value)
        : error(what), witness(std::move(witness_dir)), value(witness_value) {}

    Eigen::VectorXd witness;
    double value;
};

/// Discrete convexity was lost at a grid cell: det D2u <= 0 (equivalently the
/// smallest eigenvalue of D2u is nonpositive).
class convexity_loss_error : public error {
public:
    convexity_loss_error(const std::string& what, long cell_index, double time)
        : error(what), cell(cell_index), t(time) {}

    long cell;
    double t;
};

/// An iterative numerical procedure failed to converge or collapsed.
class numerical_failure_error : public error {
public:
    using error::error;
};

class invalid_argument_error : public error {
public:
    using error::error;
};

/// Evaluation outside the validity domain of an oracle solution.
class oracle_domain_error : public error {
public:
    using error::error;
};

/// A theorem hypothesis (e.g. N >= beta > 0) does not hold for the
/// requested check parameters.
class hypothesis_error : public error {
public:
    using error::error;
};

/// The sublevel set a check ranges over is empty.
class degenerate_window_error : public error {
public:
    using error::error;
};

/// Barrier radius requested past the extinction time. Carries t*.
class extinct_error : public error {
public:
    extinct_error(const std::string& what, double extinction_time)
        : error(what), t_star(extinction_time) {}

    double t_star;
};

/// The comparison ball is not enclosed by the initial graph.
class not_enclosed_error : public error {
public:
    using error::error;
};

/// Configuration file is malformed or violates cross-field constraints.
class config_error : public error {
public:
    using error::error;
};

}  // namespace gcf

#endif  // GCFLOW_ERRORS_HPP
