#pragma once

#include "matrix.hpp"
#include "lattice.hpp"
#include "algebra.hpp"
#include "correlation.hpp"
#include "theorem.hpp"
#include "presets.hpp"
#include "spec_io.hpp"
