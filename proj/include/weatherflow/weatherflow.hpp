#pragma once

#include "weatherflow/adapt.hpp"
#include "weatherflow/config.hpp"
#include "weatherflow/correlation.hpp"
#include "weatherflow/degrade.hpp"
#include "weatherflow/flow_estimator.hpp"
#include "weatherflow/geometry.hpp"
#include "weatherflow/grid.hpp"
#include "weatherflow/io.hpp"
#include "weatherflow/losses.hpp"
#include "weatherflow/metrics.hpp"
#include "weatherflow/rng.hpp"
#include "weatherflow/warp_error.hpp"
