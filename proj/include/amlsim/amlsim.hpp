#pragma once

#include "amlsim/core.hpp"
#include "amlsim/ledger.hpp"
#include "amlsim/schema.hpp"
#include "amlsim/config.hpp"
#include "amlsim/mapper.hpp"
#include "amlsim/simulation.hpp"
#include "amlsim/generators.hpp"
#include "amlsim/mixer.hpp"
#include "amlsim/runner.hpp"
#include "amlsim/dataset.hpp"
#include "amlsim/entitysim.hpp"
#include "amlsim/features.hpp"
#include "amlsim/invariants.hpp"
