#pragma once

#include "graphtp/adam.hpp"
#include "graphtp/artifacts.hpp"
#include "graphtp/config.hpp"
#include "graphtp/eigen.hpp"
#include "graphtp/encoder.hpp"
#include "graphtp/error.hpp"
#include "graphtp/eval.hpp"
#include "graphtp/gradcheck.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/graph_io.hpp"
#include "graphtp/hash.hpp"
#include "graphtp/info_nce.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/matrix_io.hpp"
#include "graphtp/pipeline.hpp"
#include "graphtp/prototypes.hpp"
#include "graphtp/rng.hpp"
#include "graphtp/stochastic_augment.hpp"
#include "graphtp/topo_augment.hpp"
#include "graphtp/trainer.hpp"
