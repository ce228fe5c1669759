#pragma once

#include "rdn/bench.hpp"
#include "rdn/errors.hpp"
#include "rdn/linalg.hpp"
#include "rdn/objectives.hpp"
#include "rdn/solver.hpp"
#include "rdn/spd_manifold.hpp"
