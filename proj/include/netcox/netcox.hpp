#pragma once

#include "netcox/bandwidth.hpp"
#include "netcox/config.hpp"
#include "netcox/error.hpp"
#include "netcox/estimator.hpp"
#include "netcox/features.hpp"
#include "netcox/io.hpp"
#include "netcox/kernel.hpp"
#include "netcox/likelihood.hpp"
#include "netcox/model.hpp"
#include "netcox/netstats.hpp"
#include "netcox/parallel.hpp"
#include "netcox/quadrature.hpp"
#include "netcox/random.hpp"
#include "netcox/simulator.hpp"
#include "netcox/stats.hpp"
