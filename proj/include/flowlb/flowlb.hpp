#pragma once

#include "flowlb/advection.hpp"
#include "flowlb/block_path.hpp"
#include "flowlb/comm_model.hpp"
#include "flowlb/config.hpp"
#include "flowlb/domain_decomp.hpp"
#include "flowlb/errors.hpp"
#include "flowlb/metrics.hpp"
#include "flowlb/random.hpp"
#include "flowlb/rl_agent.hpp"
#include "flowlb/sim_env.hpp"
#include "flowlb/vec.hpp"
#include "flowlb/vector_field.hpp"
#include "flowlb/workload_model.hpp"
