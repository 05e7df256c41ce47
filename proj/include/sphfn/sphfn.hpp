#pragma once

#include "bessel.hpp"
#include "group.hpp"
#include "invariants.hpp"
#include "motion.hpp"
#include "posdef.hpp"
#include "realify.hpp"
#include "spherical.hpp"
#include "types.hpp"
