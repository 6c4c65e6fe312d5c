#pragma once

#include "rollover/errors.hpp"
#include "rollover/shift.hpp"
#include "rollover/affine.hpp"
#include "rollover/riccati_ode.hpp"
#include "rollover/model.hpp"
#include "rollover/tenor.hpp"
#include "rollover/curve.hpp"
#include "rollover/swaps.hpp"
#include "rollover/credit.hpp"
#include "rollover/caplet.hpp"
#include "rollover/mc.hpp"
#include "rollover/market_data.hpp"
#include "rollover/serialize.hpp"
#include "rollover/fixtures.hpp"
#include "rollover/optimize.hpp"
#include "rollover/pipeline.hpp"
#include "rollover/calibration.hpp"
