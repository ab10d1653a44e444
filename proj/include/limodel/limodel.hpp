#pragma once

#include "limodel/core.hpp"
#include "limodel/dynamics.hpp"
#include "limodel/operators.hpp"
#include "limodel/systems.hpp"
#include "limodel/model.hpp"
#include "limodel/kernel.hpp"
#include "limodel/config.hpp"
#include "limodel/verify.hpp"
#include "limodel/report.hpp"
