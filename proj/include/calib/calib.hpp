#pragma once

#include "calib/calibrators.hpp"
#include "calib/error.hpp"
#include "calib/metrics.hpp"
#include "calib/report.hpp"
#include "calib/rng.hpp"
#include "calib/score_model.hpp"
#include "calib/serializer.hpp"
#include "calib/stats.hpp"
#include "calib/synthetic.hpp"
