#pragma once

#include "gwwalk/error.hpp"
#include "gwwalk/exact_oracle.hpp"
#include "gwwalk/excursion.hpp"
#include "gwwalk/experiments.hpp"
#include "gwwalk/forest.hpp"
#include "gwwalk/law_io.hpp"
#include "gwwalk/limit_laws.hpp"
#include "gwwalk/mark_law.hpp"
#include "gwwalk/marked_tree.hpp"
#include "gwwalk/parallel.hpp"
#include "gwwalk/rng.hpp"
#include "gwwalk/s_walk.hpp"
#include "gwwalk/stats.hpp"
#include "gwwalk/walk.hpp"
