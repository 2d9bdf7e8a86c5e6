#pragma once

#include "baselines.hpp"
#include "bench.hpp"
#include "bundle.hpp"
#include "bundle_io.hpp"
#include "collision.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "perturbation.hpp"
#include "planner.hpp"
#include "stats.hpp"
#include "trajectory.hpp"
