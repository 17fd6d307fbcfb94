#pragma once

#include "beamsim/analysis.hpp"
#include "beamsim/array_model.hpp"
#include "beamsim/ccm.hpp"
#include "beamsim/config.hpp"
#include "beamsim/harness.hpp"
#include "beamsim/presets.hpp"
#include "beamsim/random.hpp"
#include "beamsim/stepsize.hpp"
#include "beamsim/types.hpp"
