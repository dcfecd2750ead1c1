#pragma once

#include "errors.hpp"
#include "extended_real.hpp"
#include "types.hpp"
#include "special_functions.hpp"
#include "quadrature.hpp"
#include "cgf_catalog.hpp"
#include "lambda_surface.hpp"
#include "region.hpp"
#include "legendre_solver.hpp"
#include "moderate_clt.hpp"
#include "random.hpp"
#include "parallel.hpp"
#include "renewal_simulator.hpp"
#include "poisson_conditional.hpp"
#include "acceptance.hpp"
