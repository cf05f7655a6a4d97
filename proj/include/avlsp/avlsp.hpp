#pragma once

#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"
#include "avlsp/io.hpp"
#include "avlsp/preprocess.hpp"
#include "avlsp/skeleton.hpp"
#include "avlsp/distance.hpp"
#include "avlsp/vessel_graph.hpp"
#include "avlsp/lsp.hpp"
#include "avlsp/metrics.hpp"
#include "avlsp/avr.hpp"
#include "avlsp/phantom.hpp"
#include "avlsp/config.hpp"
#include "avlsp/pipeline.hpp"
