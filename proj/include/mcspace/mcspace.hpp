#pragma once

#include "mcspace/rational.hpp"
#include "mcspace/lattice.hpp"
#include "mcspace/model.hpp"
#include "mcspace/report.hpp"
#include "mcspace/algebra.hpp"
#include "mcspace/texture.hpp"
#include "mcspace/ensemble.hpp"
#include "mcspace/measurement.hpp"
#include "mcspace/suite.hpp"
#include "mcspace/config.hpp"
#include "mcspace/cli.hpp"
