#pragma once

// libtorch defines a fatal CHECK macro of its own; restore the doctest one.
#include <torch/torch.h>
#include <doctest.h>

#undef CHECK
#define CHECK DOCTEST_CHECK
