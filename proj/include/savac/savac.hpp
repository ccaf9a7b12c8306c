#pragma once

#include "savac/config.hpp"
#include "savac/fem.hpp"
#include "savac/initial.hpp"
#include "savac/linsolve.hpp"
#include "savac/mesh.hpp"
#include "savac/montecarlo.hpp"
#include "savac/noise.hpp"
#include "savac/philox.hpp"
#include "savac/potential.hpp"
#include "savac/report.hpp"
#include "savac/schemes.hpp"
#include "savac/sparse.hpp"
