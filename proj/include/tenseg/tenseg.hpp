#pragma once

// Strided tensor-network image segmentation: pixels of non-overlapping
// K x K (or K^3) patches are lifted through local feature maps, a linear
// classifier over the induced product space is approximated by a
// weight-shared matrix product state, and everything trains end to end
// with analytic gradients.

#include "tenseg/checkpoint.hpp"
#include "tenseg/common.hpp"
#include "tenseg/config.hpp"
#include "tenseg/dataset.hpp"
#include "tenseg/feature_map.hpp"
#include "tenseg/image.hpp"
#include "tenseg/loss.hpp"
#include "tenseg/metrics.hpp"
#include "tenseg/model_config.hpp"
#include "tenseg/mps.hpp"
#include "tenseg/optimizer.hpp"
#include "tenseg/patching.hpp"
#include "tenseg/pnm_io.hpp"
#include "tenseg/synthetic.hpp"
#include "tenseg/tensor.hpp"
#include "tenseg/trainer.hpp"
#include "tenseg/volume_io.hpp"
