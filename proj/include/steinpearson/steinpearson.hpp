#pragma once

#include "error.hpp"
#include "polynomial.hpp"
#include "random.hpp"
#include "quadrature.hpp"
#include "summation.hpp"
#include "pearson.hpp"
#include "expectation.hpp"
#include "moments.hpp"
#include "parallel.hpp"
#include "rodrigues.hpp"
#include "function_spec.hpp"
#include "stein.hpp"
#include "series.hpp"
#include "bounds.hpp"
#include "estimators.hpp"
