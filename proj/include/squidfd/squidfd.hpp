#pragma once

#include "squidfd/config.hpp"
#include "squidfd/derivatives.hpp"
#include "squidfd/electrostatics.hpp"
#include "squidfd/errors.hpp"
#include "squidfd/flux.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"
#include "squidfd/integrals.hpp"
#include "squidfd/io.hpp"
#include "squidfd/pipeline.hpp"
#include "squidfd/solver.hpp"
#include "squidfd/sweep.hpp"
#include "squidfd/verification.hpp"

namespace squidfd {

inline constexpr const char* version = "0.1.0";

}  // namespace squidfd
