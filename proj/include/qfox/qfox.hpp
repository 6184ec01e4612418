#pragma once

#include "qfox/baselines.hpp"
#include "qfox/envs.hpp"
#include "qfox/experiment.hpp"
#include "qfox/fox.hpp"
#include "qfox/parallel.hpp"
#include "qfox/qlearn.hpp"
#include "qfox/random.hpp"
#include "qfox/search_space.hpp"
#include "qfox/tuner.hpp"
