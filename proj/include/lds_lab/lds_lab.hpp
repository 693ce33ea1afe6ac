#pragma once

#include "config.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "experiments.hpp"
#include "filter_bounds.hpp"
#include "kalman.hpp"
#include "lemmas.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "risk_kl.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "svg.hpp"
