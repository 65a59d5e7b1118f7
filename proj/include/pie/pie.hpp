#pragma once

#include "pie/ids.hpp"
#include "pie/random.hpp"
#include "pie/ingest.hpp"
#include "pie/graph.hpp"
#include "pie/ppr.hpp"
#include "pie/bandit.hpp"
#include "pie/blending.hpp"
#include "pie/ranker.hpp"
#include "pie/simulator.hpp"
#include "pie/metrics.hpp"
#include "pie/config.hpp"
#include "pie/experiment.hpp"
