#pragma once

#include "saved/autodiff/adam.hpp"
#include "saved/autodiff/ops.hpp"
#include "saved/autodiff/tape.hpp"
#include "saved/autodiff/tensor.hpp"
