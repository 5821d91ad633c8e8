#pragma once

#include "rdd/bundle.hpp"
#include "rdd/core.hpp"
#include "rdd/error.hpp"
#include "rdd/evaluation.hpp"
#include "rdd/interval_db.hpp"
#include "rdd/partition_solver.hpp"
#include "rdd/scoring.hpp"
#include "rdd/solver.hpp"
#include "rdd/synth.hpp"
