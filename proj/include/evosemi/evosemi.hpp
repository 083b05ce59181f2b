#pragma once

#include "evosemi/error.hpp"
#include "evosemi/types.hpp"
#include "evosemi/growth_rate.hpp"
#include "evosemi/semiflow.hpp"
#include "evosemi/evolution_family.hpp"
#include "evosemi/evo_semigroup.hpp"
#include "evosemi/dichotomy.hpp"
