// Umbrella header for the wz library.
#pragma once

#include "wz/error.hpp"
#include "wz/rng.hpp"
#include "wz/spaces.hpp"
#include "wz/noise.hpp"
#include "wz/operators.hpp"
#include "wz/models.hpp"
#include "wz/solvers.hpp"
#include "wz/analysis.hpp"
#include "wz/config.hpp"
#include "wz/io.hpp"
