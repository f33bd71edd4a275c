#ifndef CTFRL_CTFRL_HPP
#define CTFRL_CTFRL_HPP

#include "ctfrl/agent.hpp"
#include "ctfrl/core.hpp"
#include "ctfrl/env/portscan.hpp"
#include "ctfrl/env/server.hpp"
#include "ctfrl/env/web.hpp"
#include "ctfrl/expert.hpp"
#include "ctfrl/harness/config.hpp"
#include "ctfrl/harness/metrics.hpp"
#include "ctfrl/harness/records.hpp"
#include "ctfrl/harness/runner.hpp"
#include "ctfrl/qtable.hpp"
#include "ctfrl/rng.hpp"

#endif  // CTFRL_CTFRL_HPP
