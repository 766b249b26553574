#pragma once

#include "abstraction.hpp"
#include "check.hpp"
#include "cycle_search.hpp"
#include "explicit_engine.hpp"
#include "io.hpp"
#include "linear.hpp"
#include "machines.hpp"
#include "parikh.hpp"
#include "pushdown.hpp"
#include "reduction.hpp"
