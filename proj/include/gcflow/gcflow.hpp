#ifndef GCFLOW_GCFLOW_HPP
#define GCFLOW_GCFLOW_HPP

#include "gcflow/anisotropy.hpp"
#include "gcflow/errors.hpp"
#include "gcflow/estimates.hpp"
#include "gcflow/experiment.hpp"
#include "gcflow/geometry.hpp"
#include "gcflow/grid.hpp"
#include "gcflow/io.hpp"
#include "gcflow/oracles.hpp"
#include "gcflow/solver.hpp"
#include "gcflow/sphere.hpp"

#endif  // GCFLOW_GCFLOW_HPP
