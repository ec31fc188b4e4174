#pragma once

#include "colorspace/autodiff.hpp"
#include "colorspace/color_ops.hpp"
#include "colorspace/commands.hpp"
#include "colorspace/config.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/error.hpp"
#include "colorspace/hash.hpp"
#include "colorspace/metrics.hpp"
#include "colorspace/networks.hpp"
#include "colorspace/optim.hpp"
#include "colorspace/random.hpp"
#include "colorspace/sampler.hpp"
#include "colorspace/tensor.hpp"
#include "colorspace/toy_data.hpp"
#include "colorspace/trainer.hpp"
