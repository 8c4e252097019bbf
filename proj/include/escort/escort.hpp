#pragma once

// Umbrella header.

#include "escort/checkpoint.hpp"
#include "escort/cli.hpp"
#include "escort/config.hpp"
#include "escort/config_io.hpp"
#include "escort/core.hpp"
#include "escort/evaluate.hpp"
#include "escort/marl.hpp"
#include "escort/neural.hpp"
#include "escort/render.hpp"
#include "escort/roles.hpp"
#include "escort/scenario.hpp"
#include "escort/threat.hpp"
#include "escort/trajectory.hpp"
#include "escort/world.hpp"
