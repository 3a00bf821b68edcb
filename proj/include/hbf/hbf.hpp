#pragma once

#include <hbf/baselines.hpp>
#include <hbf/bench.hpp>
#include <hbf/channel_gen.hpp>
#include <hbf/conic_subproblem.hpp>
#include <hbf/core_model.hpp>
#include <hbf/error.hpp>
#include <hbf/hybrid_exact.hpp>
#include <hbf/lifted_constraints.hpp>
#include <hbf/lifted_penalty.hpp>
#include <hbf/qos_power_min.hpp>
#include <hbf/rng.hpp>
