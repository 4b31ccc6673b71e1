#pragma once

#include "qspin/errors.hpp"
#include "qspin/lattice.hpp"
#include "qspin/operators.hpp"
#include "qspin/presets.hpp"
#include "qspin/state.hpp"
#include "qspin/dynamics.hpp"
#include "qspin/parallel.hpp"
#include "qspin/entropy_production.hpp"
#include "qspin/scenario/config.hpp"
#include "qspin/scenario/csv.hpp"
#include "qspin/scenario/runner.hpp"
#include "qspin/scenario/checks.hpp"
