#pragma once

// Umbrella header: exploration-bonus actor-critic with value-disagreement
// and self-imitation bonuses under an adaptive gain scheduler.

#include "idex/agent.hpp"
#include "idex/bonus_bfs.hpp"
#include "idex/bonus_dfs.hpp"
#include "idex/critic.hpp"
#include "idex/env.hpp"
#include "idex/harness.hpp"
#include "idex/mlp.hpp"
#include "idex/numeric.hpp"
#include "idex/policy.hpp"
#include "idex/replay.hpp"
#include "idex/robust.hpp"
#include "idex/rng.hpp"
#include "idex/scheduler.hpp"
