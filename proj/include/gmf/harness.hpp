#pragma once

#include "gmf/harness/avocado.hpp"
#include "gmf/harness/config.hpp"
#include "gmf/harness/linear_check.hpp"
#include "gmf/harness/nrho.hpp"
#include "gmf/harness/report.hpp"
#include "gmf/harness/sweep.hpp"
