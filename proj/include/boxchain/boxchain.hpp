#pragma once

// Umbrella header: the DAG transaction ledger, its mirroring chain of
// antichain boxes, the poset utilities, the stochastic models, and the
// deterministic scenario simulator.

#include "boxchain/chain.hpp"
#include "boxchain/config.hpp"
#include "boxchain/fixture.hpp"
#include "boxchain/hash.hpp"
#include "boxchain/ledger.hpp"
#include "boxchain/poset.hpp"
#include "boxchain/rng.hpp"
#include "boxchain/sim.hpp"
#include "boxchain/stochastics.hpp"
