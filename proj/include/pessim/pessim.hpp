#pragma once

#include "pessim/types.hpp"
#include "pessim/problem.hpp"
#include "pessim/kkt.hpp"
#include "pessim/linprog.hpp"
#include "pessim/parallel.hpp"
#include "pessim/local_solver.hpp"
#include "pessim/maxmin.hpp"
#include "pessim/pattern_search.hpp"
#include "pessim/scholtes.hpp"
#include "pessim/stationarity.hpp"
#include "pessim/setvalued.hpp"
#include "pessim/benchlib.hpp"
#include "pessim/io.hpp"
