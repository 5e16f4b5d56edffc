#pragma once

#include "bandwidth.hpp"
#include "contour.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "evaluation.hpp"
#include "io.hpp"
#include "matcore.hpp"
#include "parallel.hpp"
#include "rcov.hpp"
#include "stats.hpp"
#include "warsim.hpp"
#include "wishart.hpp"
