#pragma once

#include "surrogate/errors.hpp"
#include "surrogate/model.hpp"
#include "surrogate/rng.hpp"
#include "surrogate/sampling.hpp"
#include "surrogate/asymptotics.hpp"
#include "surrogate/inference.hpp"
#include "surrogate/regions.hpp"
#include "surrogate/experiments.hpp"
#include "surrogate/io.hpp"
