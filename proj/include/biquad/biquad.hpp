#pragma once

#include "biquad/actuation.hpp"
#include "biquad/allocation.hpp"
#include "biquad/attitude_control.hpp"
#include "biquad/csv_log.hpp"
#include "biquad/params.hpp"
#include "biquad/position_control.hpp"
#include "biquad/rigid_body.hpp"
#include "biquad/simulation.hpp"
