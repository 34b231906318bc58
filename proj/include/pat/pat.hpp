#pragma once

#include "pat/admm.hpp"
#include "pat/config.hpp"
#include "pat/dwt.hpp"
#include "pat/errors.hpp"
#include "pat/estimators.hpp"
#include "pat/field_io.hpp"
#include "pat/grid.hpp"
#include "pat/metrics.hpp"
#include "pat/parallel.hpp"
#include "pat/simulation.hpp"
#include "pat/tv.hpp"
#include "pat/vaguelette.hpp"
#include "pat/wave_operator.hpp"

namespace pat {

inline constexpr const char* version = "0.1.0";

}  // namespace pat
