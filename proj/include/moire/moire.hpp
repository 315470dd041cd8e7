#pragma once

// umbrella header for the incommensurate-bilayer mechanics library

#include "moire/core.hpp"
#include "moire/geometry.hpp"
#include "moire/zeta.hpp"
#include "moire/diophantine.hpp"
#include "moire/dirichlet.hpp"
#include "moire/observable.hpp"
#include "moire/ergodic.hpp"
#include "moire/potential.hpp"
#include "moire/displacement.hpp"
#include "moire/stencil.hpp"
#include "moire/energy.hpp"
#include "moire/rate_constant.hpp"
#include "moire/relax.hpp"
#include "moire/fit.hpp"
#include "moire/io.hpp"
#include "moire/experiment.hpp"
