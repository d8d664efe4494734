#pragma once

#include "transa/analysis.hpp"
#include "transa/checkpoint.hpp"
#include "transa/config.hpp"
#include "transa/corruption.hpp"
#include "transa/evaluation.hpp"
#include "transa/matrix.hpp"
#include "transa/model.hpp"
#include "transa/scores.hpp"
#include "transa/training.hpp"
#include "transa/triple_set.hpp"
