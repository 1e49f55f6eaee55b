#pragma once

#include "epigraph/engine.hpp"
#include "epigraph/graph.hpp"
#include "epigraph/interventions.hpp"
#include "epigraph/oracle.hpp"
#include "epigraph/population.hpp"
#include "epigraph/progression.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/runner.hpp"
#include "epigraph/scenario.hpp"
#include "epigraph/state.hpp"
#include "epigraph/transmission.hpp"
#include "epigraph/types.hpp"
