#pragma once

#include "typlab/table.hpp"
#include "typlab/model.hpp"
#include "typlab/measures.hpp"
#include "typlab/empirical.hpp"
#include "typlab/typicality.hpp"
#include "typlab/rng.hpp"
#include "typlab/sampling.hpp"
#include "typlab/experiments.hpp"
#include "typlab/fixtures.hpp"
#include "typlab/io.hpp"
