#pragma once

#include "blockisd/baselines.hpp"
#include "blockisd/channel.hpp"
#include "blockisd/harness.hpp"
#include "blockisd/isd.hpp"
#include "blockisd/pilot.hpp"
#include "blockisd/rng.hpp"
#include "blockisd/solver.hpp"
