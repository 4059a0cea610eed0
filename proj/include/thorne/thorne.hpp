// Umbrella header.
#pragma once

#include "thorne/common.hpp"
#include "thorne/random.hpp"
#include "thorne/quadrature.hpp"
#include "thorne/stats.hpp"
#include "thorne/model.hpp"
#include "thorne/distribution.hpp"
#include "thorne/geometry.hpp"
#include "thorne/histogram.hpp"
#include "thorne/optimized_histogram.hpp"
#include "thorne/kde.hpp"
#include "thorne/fit.hpp"
#include "thorne/sde.hpp"
#include "thorne/validation.hpp"
#include "thorne/risk.hpp"
#include "thorne/serialization.hpp"
