#pragma once

#include "fairim/baselines.hpp"
#include "fairim/common.hpp"
#include "fairim/datasets.hpp"
#include "fairim/diffusion.hpp"
#include "fairim/embedding.hpp"
#include "fairim/experiment.hpp"
#include "fairim/graph.hpp"
#include "fairim/graph_io.hpp"
#include "fairim/kmeans.hpp"
#include "fairim/mlp.hpp"
#include "fairim/rng.hpp"
#include "fairim/selection.hpp"
