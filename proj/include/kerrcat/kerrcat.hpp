#pragma once

#include "kerrcat/coherent.hpp"
#include "kerrcat/conditioning.hpp"
#include "kerrcat/csv.hpp"
#include "kerrcat/errors.hpp"
#include "kerrcat/kerr.hpp"
#include "kerrcat/log_complex.hpp"
#include "kerrcat/metrics.hpp"
#include "kerrcat/noise.hpp"
#include "kerrcat/quadrature.hpp"
#include "kerrcat/state_json.hpp"
#include "kerrcat/sweep.hpp"
