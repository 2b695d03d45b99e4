#pragma once

#include "mpbl/baselines.hpp"
#include "mpbl/bootstrap.hpp"
#include "mpbl/data.hpp"
#include "mpbl/ecdf.hpp"
#include "mpbl/error.hpp"
#include "mpbl/estimators.hpp"
#include "mpbl/grid.hpp"
#include "mpbl/io.hpp"
#include "mpbl/likelihood.hpp"
#include "mpbl/linalg.hpp"
#include "mpbl/nelder_mead.hpp"
#include "mpbl/normal.hpp"
#include "mpbl/optimize.hpp"
#include "mpbl/quadrature.hpp"
#include "mpbl/random.hpp"
#include "mpbl/simgen.hpp"
#include "mpbl/transform.hpp"
