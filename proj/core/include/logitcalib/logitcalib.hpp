#pragma once

#include "logitcalib/calibration.hpp"
#include "logitcalib/dataset.hpp"
#include "logitcalib/density.hpp"
#include "logitcalib/error.hpp"
#include "logitcalib/inference.hpp"
#include "logitcalib/metrics.hpp"
#include "logitcalib/numeric.hpp"
#include "logitcalib/synth.hpp"
