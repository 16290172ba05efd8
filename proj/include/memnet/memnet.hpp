#pragma once

#include "memnet/geometry.hpp"
#include "memnet/mesh.hpp"
#include "memnet/fem.hpp"
#include "memnet/spatial_index.hpp"
#include "memnet/network.hpp"
#include "memnet/projection.hpp"
#include "memnet/transfer.hpp"
#include "memnet/solver.hpp"
#include "memnet/optimize.hpp"
#include "memnet/analysis.hpp"
