#pragma once

#include "gim/core.hpp"
#include "gim/errors.hpp"
#include "gim/fit.hpp"
#include "gim/select.hpp"
#include "gim/spectral.hpp"
#include "gim/varmod.hpp"
#include "gim/whittle.hpp"
