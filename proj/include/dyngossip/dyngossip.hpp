#pragma once

#include "dyngossip/adversary.hpp"
#include "dyngossip/core.hpp"
#include "dyngossip/engine.hpp"
#include "dyngossip/evolution.hpp"
#include "dyngossip/generators.hpp"
#include "dyngossip/io.hpp"
#include "dyngossip/offline.hpp"
#include "dyngossip/rng.hpp"
#include "dyngossip/strategies.hpp"
