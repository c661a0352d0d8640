#pragma once

#include "fpm/baselines.hpp"
#include "fpm/diffusion.hpp"
#include "fpm/embedding.hpp"
#include "fpm/error.hpp"
#include "fpm/experiment.hpp"
#include "fpm/graph.hpp"
#include "fpm/metrics.hpp"
#include "fpm/qnet.hpp"
#include "fpm/rng.hpp"
#include "fpm/trainer.hpp"
