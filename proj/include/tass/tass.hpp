#pragma once

#include "tass/types.hpp"
#include "tass/parallel.hpp"
#include "tass/spin_core.hpp"
#include "tass/evolution.hpp"
#include "tass/observables.hpp"
#include "tass/entanglement.hpp"
#include "tass/wigner.hpp"
#include "tass/bell.hpp"
#include "tass/analysis.hpp"
