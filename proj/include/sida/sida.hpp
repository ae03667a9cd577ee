#pragma once

// Umbrella header for the whole library.

#include "commands.hpp"
#include "data.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "gev.hpp"
#include "graph.hpp"
#include "linalg.hpp"
#include "log.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "parallel.hpp"
#include "run_config.hpp"
#include "scatter.hpp"
#include "simgen.hpp"
#include "sparse.hpp"
#include "stability.hpp"
#include "tuning.hpp"
