#pragma once

#include "deephedge/adam.hpp"
#include "deephedge/autodiff.hpp"
#include "deephedge/baseline_delta.hpp"
#include "deephedge/config.hpp"
#include "deephedge/evaluation.hpp"
#include "deephedge/hedging.hpp"
#include "deephedge/market_sim.hpp"
#include "deephedge/matrix.hpp"
#include "deephedge/mlp.hpp"
#include "deephedge/payoff.hpp"
#include "deephedge/report.hpp"
#include "deephedge/serialization.hpp"
#include "deephedge/training.hpp"
