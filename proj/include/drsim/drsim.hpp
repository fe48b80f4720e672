// Umbrella header: pulls in the whole library.
#pragma once

#include "drsim/config.hpp"
#include "drsim/csv.hpp"
#include "drsim/demand.hpp"
#include "drsim/errors.hpp"
#include "drsim/estimation.hpp"
#include "drsim/market.hpp"
#include "drsim/policies.hpp"
#include "drsim/quadrature.hpp"
#include "drsim/rng.hpp"
#include "drsim/shock.hpp"
#include "drsim/simulator.hpp"
#include "drsim/truncated_normal.hpp"
