// factint.hpp: everything except the command line.
#pragma once
#include "basis.hpp"
#include "dataset.hpp"
#include "design.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "inference.hpp"
#include "mixture.hpp"
#include "objective.hpp"
#include "optimizer.hpp"
#include "random.hpp"
#include "sim.hpp"
