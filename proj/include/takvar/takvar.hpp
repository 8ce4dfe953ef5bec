#pragma once

// Umbrella header: sparse storage and pattern calculus, Cholesky + Takahashi
// sparse inverse subsets, exactness condition checks, GMRF model builders,
// variance engines, and the benchmark/bundle utilities.

#include "takvar/types.hpp"
#include "takvar/sparse_pattern.hpp"
#include "takvar/sparse_matrix.hpp"
#include "takvar/ordering.hpp"
#include "takvar/matrix_market.hpp"
#include "takvar/symbolic.hpp"
#include "takvar/cholesky.hpp"
#include "takvar/takahashi.hpp"
#include "takvar/model.hpp"
#include "takvar/variance.hpp"
#include "takvar/gmrf.hpp"
#include "takvar/factor_io.hpp"
#include "takvar/bundle.hpp"
#include "takvar/bench.hpp"
