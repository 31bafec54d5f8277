#pragma once

// Umbrella header: the whole toolkit in one include.

#include "cka/distill.hpp"
#include "cka/errors.hpp"
#include "cka/io.hpp"
#include "cka/linalg.hpp"
#include "cka/losses.hpp"
#include "cka/rng.hpp"
#include "cka/similarity.hpp"
#include "cka/tensor.hpp"
#include "cka/verify.hpp"
