#pragma once

#include "crowdflow/ml.hpp"

namespace crowdflow::ml {

// dtree and rforest training share one tree builder.
LearnedParameters fit_trees(const ModelSpec& spec, const Dataset& train);

}  // namespace crowdflow::ml
