#pragma once

// Umbrella header.

#include "lds/errors.hpp"
#include "lds/numeric.hpp"
#include "lds/measures.hpp"
#include "lds/cramer.hpp"
#include "lds/sanov.hpp"
#include "lds/escort.hpp"
#include "lds/selection.hpp"
#include "lds/stein.hpp"
#include "lds/io.hpp"
#include "lds/experiment.hpp"
