#pragma once

#include "lfp/activation.hpp"
#include "lfp/bounds.hpp"
#include "lfp/dataset.hpp"
#include "lfp/dynamics.hpp"
#include "lfp/errors.hpp"
#include "lfp/experiment.hpp"
#include "lfp/network.hpp"
#include "lfp/ntk.hpp"
#include "lfp/param_model.hpp"
#include "lfp/solver.hpp"
#include "lfp/spectral.hpp"
#include "lfp/spline.hpp"
