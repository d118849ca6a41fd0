#pragma once

#include "margsub/errors.hpp"
#include "margsub/types.hpp"
#include "margsub/lp.hpp"
#include "margsub/convexgeom.hpp"
#include "margsub/model.hpp"
#include "margsub/problem_io.hpp"
#include "margsub/clarke.hpp"
#include "margsub/marginal.hpp"
#include "margsub/estimate.hpp"
#include "margsub/ekeland.hpp"
#include "margsub/verify.hpp"
#include "margsub/report.hpp"
