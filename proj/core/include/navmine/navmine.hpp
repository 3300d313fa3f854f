#pragma once

#include "navmine/cluster.hpp"
#include "navmine/csv.hpp"
#include "navmine/evaluate.hpp"
#include "navmine/logparse.hpp"
#include "navmine/matrix.hpp"
#include "navmine/preprocess.hpp"
