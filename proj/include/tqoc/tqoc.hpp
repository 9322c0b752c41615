#pragma once

#include "tqoc/controls.hpp"
#include "tqoc/diagnostics.hpp"
#include "tqoc/dynamics.hpp"
#include "tqoc/errors.hpp"
#include "tqoc/gpm.hpp"
#include "tqoc/model.hpp"
#include "tqoc/objectives.hpp"
#include "tqoc/pmp.hpp"
#include "tqoc/smallmat.hpp"
#include "tqoc/spectral.hpp"
