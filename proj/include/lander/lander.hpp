#pragma once

#include "lander/baseline.hpp"
#include "lander/checkpoint.hpp"
#include "lander/common.hpp"
#include "lander/config.hpp"
#include "lander/dynamics.hpp"
#include "lander/ekf.hpp"
#include "lander/environment.hpp"
#include "lander/evaluation.hpp"
#include "lander/mlp.hpp"
#include "lander/replay_buffer.hpp"
#include "lander/reward.hpp"
#include "lander/scenario.hpp"
#include "lander/td3.hpp"
#include "lander/trace.hpp"
