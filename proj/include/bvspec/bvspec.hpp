#pragma once

#include "bvspec/chardet.hpp"
#include "bvspec/classify.hpp"
#include "bvspec/expression.hpp"
#include "bvspec/grid.hpp"
#include "bvspec/integrate.hpp"
#include "bvspec/io.hpp"
#include "bvspec/probe.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/resolvent.hpp"
#include "bvspec/spectrum.hpp"
#include "bvspec/types.hpp"
