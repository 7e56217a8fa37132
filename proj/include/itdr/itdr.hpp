#pragma once

// Umbrella header for the whole library.

#include "itdr/dataset.hpp"
#include "itdr/estimator.hpp"
#include "itdr/fusion.hpp"
#include "itdr/geometry.hpp"
#include "itdr/harness.hpp"
#include "itdr/image.hpp"
#include "itdr/model.hpp"
#include "itdr/oracle.hpp"
#include "itdr/randomization.hpp"
#include "itdr/render.hpp"
#include "itdr/rng.hpp"
#include "itdr/sample.hpp"
#include "itdr/scene.hpp"
#include "itdr/selection.hpp"
#include "itdr/train.hpp"
