#pragma once

#include "histlab/core.hpp"
#include "histlab/linalg.hpp"
#include "histlab/analyser.hpp"
#include "histlab/scenarios.hpp"
#include "histlab/history_space.hpp"
#include "histlab/commutant.hpp"
#include "histlab/histories.hpp"
#include "histlab/sampler.hpp"
#include "histlab/consistency.hpp"
#include "histlab/refinement_checks.hpp"
