#pragma once

#include "cac/branch_classifier.hpp"
#include "cac/candidates.hpp"
#include "cac/error.hpp"
#include "cac/labeling.hpp"
#include "cac/localization.hpp"
#include "cac/metaimage.hpp"
#include "cac/metrics.hpp"
#include "cac/morphology.hpp"
#include "cac/phantom.hpp"
#include "cac/pipeline.hpp"
#include "cac/scoring.hpp"
#include "cac/separation.hpp"
#include "cac/vessel_graph.hpp"
#include "cac/vessel_tree.hpp"
#include "cac/volume.hpp"
