// Umbrella header for the library (the CLI layer lives in cli.hpp).
#ifndef BCONC_BCONC_HPP
#define BCONC_BCONC_HPP

#include "bconc/errors.hpp"
#include "bconc/quadrature.hpp"
#include "bconc/geometry.hpp"
#include "bconc/oscillation.hpp"
#include "bconc/nonlinearity.hpp"
#include "bconc/fe_field.hpp"
#include "bconc/sparse.hpp"
#include "bconc/concentration.hpp"
#include "bconc/assembly.hpp"
#include "bconc/solver.hpp"
#include "bconc/study.hpp"

#endif
