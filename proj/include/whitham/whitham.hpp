#pragma once

#include "whitham/dispersion.hpp"
#include "whitham/energy.hpp"
#include "whitham/errors.hpp"
#include "whitham/evolve.hpp"
#include "whitham/experiments.hpp"
#include "whitham/expression.hpp"
#include "whitham/io.hpp"
#include "whitham/pseudoproduct.hpp"
#include "whitham/spectral.hpp"
