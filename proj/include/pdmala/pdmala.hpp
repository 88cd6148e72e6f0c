#pragma once

#include "pdmala/diagnostics.hpp"
#include "pdmala/diffusion_lab.hpp"
#include "pdmala/geometry.hpp"
#include "pdmala/linalg.hpp"
#include "pdmala/models/fitzhugh_nagumo.hpp"
#include "pdmala/models/gaussian.hpp"
#include "pdmala/models/logistic.hpp"
#include "pdmala/samplers.hpp"
#include "pdmala/target_model.hpp"
