#pragma once

// Umbrella header for the streaming RL toolkit.

#include "streamrl/common.hpp"
#include "streamrl/net.hpp"
#include "streamrl/objectives.hpp"
#include "streamrl/optim.hpp"
#include "streamrl/env.hpp"
#include "streamrl/bridge.hpp"
#include "streamrl/agent.hpp"
#include "streamrl/oracle.hpp"
#include "streamrl/stats.hpp"
#include "streamrl/config.hpp"
#include "streamrl/harness.hpp"
