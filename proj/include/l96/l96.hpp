#pragma once

#include "l96/continuation.hpp"
#include "l96/equilibria.hpp"
#include "l96/flow.hpp"
#include "l96/io.hpp"
#include "l96/model.hpp"
#include "l96/spectral.hpp"
