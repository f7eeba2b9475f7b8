#pragma once

// Umbrella header.

#include "erm/baselines.hpp"
#include "erm/dasvrda.hpp"
#include "erm/data_io.hpp"
#include "erm/dataset.hpp"
#include "erm/error.hpp"
#include "erm/estimator.hpp"
#include "erm/harness.hpp"
#include "erm/lazy.hpp"
#include "erm/problem.hpp"
#include "erm/sampling.hpp"
#include "erm/schedule.hpp"
#include "erm/solver.hpp"
