#pragma once

#include "chainlens/centrality.hpp"
#include "chainlens/compress.hpp"
#include "chainlens/config.hpp"
#include "chainlens/error.hpp"
#include "chainlens/features.hpp"
#include "chainlens/gfn.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/lstm.hpp"
#include "chainlens/metrics.hpp"
#include "chainlens/nn.hpp"
#include "chainlens/parallel.hpp"
#include "chainlens/pipeline.hpp"
#include "chainlens/rng.hpp"
#include "chainlens/sfe.hpp"
#include "chainlens/synthetic.hpp"
#include "chainlens/tx.hpp"
