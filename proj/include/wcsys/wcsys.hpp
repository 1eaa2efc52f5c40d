#pragma once

#include "wcsys/error.hpp"
#include "wcsys/coefficient.hpp"
#include "wcsys/operator.hpp"
#include "wcsys/hypotheses.hpp"
#include "wcsys/grid.hpp"
#include "wcsys/stencil.hpp"
#include "wcsys/discrete_operator.hpp"
#include "wcsys/evolution.hpp"
#include "wcsys/report.hpp"
#include "wcsys/random_field.hpp"
#include "wcsys/estimates.hpp"
#include "wcsys/resolvent.hpp"
#include "wcsys/invariant.hpp"
#include "wcsys/presets.hpp"
#include "wcsys/config.hpp"
#include "wcsys/grid_io.hpp"
#include "wcsys/suite.hpp"
