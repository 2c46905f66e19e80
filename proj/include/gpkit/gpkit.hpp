#pragma once

#include "gpkit/error.hpp"
#include "gpkit/gaussian.hpp"
#include "gpkit/kernels.hpp"
#include "gpkit/gpr.hpp"
#include "gpkit/model_selection.hpp"
#include "gpkit/rkhs.hpp"
#include "gpkit/uncertainty.hpp"
#include "gpkit/dynamics.hpp"
#include "gpkit/io.hpp"
