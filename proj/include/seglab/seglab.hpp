#pragma once

// Umbrella header for the whole library.

#include "seglab/adam.hpp"
#include "seglab/arch.hpp"
#include "seglab/checkpoint.hpp"
#include "seglab/config.hpp"
#include "seglab/csvio.hpp"
#include "seglab/data.hpp"
#include "seglab/error.hpp"
#include "seglab/gradcheck.hpp"
#include "seglab/graph.hpp"
#include "seglab/kernels.hpp"
#include "seglab/loss.hpp"
#include "seglab/metrics.hpp"
#include "seglab/pgm.hpp"
#include "seglab/predict.hpp"
#include "seglab/rng.hpp"
#include "seglab/serialize.hpp"
#include "seglab/stats.hpp"
#include "seglab/studies.hpp"
#include "seglab/svg.hpp"
#include "seglab/tensor.hpp"
#include "seglab/trainer.hpp"
