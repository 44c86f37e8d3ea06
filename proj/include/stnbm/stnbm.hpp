#pragma once

#include "stnbm/bitstring.hpp"
#include "stnbm/block_tensor.hpp"
#include "stnbm/builder.hpp"
#include "stnbm/charges.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/dense.hpp"
#include "stnbm/errors.hpp"
#include "stnbm/geo.hpp"
#include "stnbm/io.hpp"
#include "stnbm/oracles.hpp"
#include "stnbm/sampler.hpp"
#include "stnbm/symmps.hpp"
#include "stnbm/trainer.hpp"
