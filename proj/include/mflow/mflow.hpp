#pragma once

#include "mflow/config.hpp"
#include "mflow/entropy.hpp"
#include "mflow/experiment.hpp"
#include "mflow/flow.hpp"
#include "mflow/functionals.hpp"
#include "mflow/grid.hpp"
#include "mflow/io.hpp"
#include "mflow/linalg.hpp"
#include "mflow/random_field.hpp"
#include "mflow/spectral.hpp"
#include "mflow/stability.hpp"
#include "mflow/tensor_field.hpp"
#include "mflow/willmore.hpp"
