#pragma once

// Umbrella header for the informative path planning library.

#include "ipp/benchmarks.hpp"
#include "ipp/cmaes.hpp"
#include "ipp/experiment.hpp"
#include "ipp/fusion.hpp"
#include "ipp/grid_map.hpp"
#include "ipp/metrics.hpp"
#include "ipp/mission.hpp"
#include "ipp/planner.hpp"
#include "ipp/sensor.hpp"
#include "ipp/trajectory.hpp"
#include "ipp/world.hpp"
