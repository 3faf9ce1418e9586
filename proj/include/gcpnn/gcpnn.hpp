#pragma once

#include "gcpnn/baselines.hpp"
#include "gcpnn/dimacs.hpp"
#include "gcpnn/embed.hpp"
#include "gcpnn/error.hpp"
#include "gcpnn/eval.hpp"
#include "gcpnn/exact.hpp"
#include "gcpnn/forge.hpp"
#include "gcpnn/generators.hpp"
#include "gcpnn/graph.hpp"
#include "gcpnn/layers.hpp"
#include "gcpnn/model.hpp"
#include "gcpnn/plot.hpp"
#include "gcpnn/rng.hpp"
#include "gcpnn/tensor.hpp"
#include "gcpnn/train.hpp"

namespace gcpnn {
inline constexpr const char* kVersion = "0.1.0";
}
