#pragma once

#include "cac/morphology/components.hpp"
#include "cac/morphology/dilation.hpp"
#include "cac/morphology/distance.hpp"
#include "cac/morphology/thinning.hpp"
