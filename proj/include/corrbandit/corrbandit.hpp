#pragma once

#include "corrbandit/algorithms.hpp"
#include "corrbandit/bounds.hpp"
#include "corrbandit/covariance.hpp"
#include "corrbandit/environment.hpp"
#include "corrbandit/error.hpp"
#include "corrbandit/estimator.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/pairs.hpp"
#include "corrbandit/rng.hpp"
#include "corrbandit/theory.hpp"
