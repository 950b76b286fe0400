// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lrsd/baselines.hpp"
#include "lrsd/best_response.hpp"
#include "lrsd/common.hpp"
#include "lrsd/datagen.hpp"
#include "lrsd/distributed.hpp"
#include "lrsd/line_search.hpp"
#include "lrsd/matrix_io.hpp"
#include "lrsd/problem.hpp"
#include "lrsd/report.hpp"
#include "lrsd/rng.hpp"
#include "lrsd/solver.hpp"
