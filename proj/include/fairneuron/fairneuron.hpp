#pragma once

// Umbrella header: pulls in the whole library.

#include "fairneuron/baselines.hpp"
#include "fairneuron/clustering.hpp"
#include "fairneuron/common.hpp"
#include "fairneuron/datagen.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/experiment.hpp"
#include "fairneuron/metrics.hpp"
#include "fairneuron/model_io.hpp"
#include "fairneuron/network.hpp"
#include "fairneuron/repair.hpp"
#include "fairneuron/slicing.hpp"
#include "fairneuron/train.hpp"
#include "fairneuron/tuning.hpp"
#include "fairneuron/version.hpp"
