#pragma once

// Everything.

#include "csl/errors.hpp"
#include "csl/curve.hpp"
#include "csl/cone.hpp"
#include "csl/quadrature.hpp"
#include "csl/oscillator.hpp"
#include "csl/grid.hpp"
#include "csl/synth.hpp"
#include "csl/avgop.hpp"
#include "csl/sweep.hpp"
#include "csl/config.hpp"
#include "csl/io.hpp"
