#pragma once

// Umbrella header for the multi-view anchor-graph clustering library.

#include "mvclust/anchor_graph.hpp"
#include "mvclust/autoencoder.hpp"
#include "mvclust/contrastive.hpp"
#include "mvclust/dataset.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/io.hpp"
#include "mvclust/kmeans.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/metrics.hpp"
#include "mvclust/pipeline.hpp"
#include "mvclust/rng.hpp"
#include "mvclust/selfsup.hpp"
#include "mvclust/spectral.hpp"
#include "mvclust/svd.hpp"
