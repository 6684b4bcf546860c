// Umbrella header.

#pragma once

#include "ehd/bifurcation.hpp"
#include "ehd/config.hpp"
#include "ehd/dataset.hpp"
#include "ehd/green.hpp"
#include "ehd/grid.hpp"
#include "ehd/params.hpp"
#include "ehd/residual.hpp"
#include "ehd/stability.hpp"
#include "ehd/strip_solver.hpp"
#include "ehd/surface.hpp"
#include "ehd/version.hpp"
