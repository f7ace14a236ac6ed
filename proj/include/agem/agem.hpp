#pragma once

#include "agem/adaptive.hpp"
#include "agem/common.hpp"
#include "agem/dataset.hpp"
#include "agem/eval.hpp"
#include "agem/experiment.hpp"
#include "agem/gae.hpp"
#include "agem/graph.hpp"
#include "agem/train.hpp"
