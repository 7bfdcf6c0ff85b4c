#pragma once

#include "common.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "experiments.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "persistence.hpp"
#include "rng.hpp"
#include "skipgram.hpp"
#include "topo_loss.hpp"
#include "trainer.hpp"
#include "transport.hpp"
#include "walks.hpp"
