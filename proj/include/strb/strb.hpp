// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "strb/common.hpp"
#include "strb/config.hpp"
#include "strb/estimators.hpp"
#include "strb/greedy.hpp"
#include "strb/hifi.hpp"
#include "strb/io.hpp"
#include "strb/kron.hpp"
#include "strb/mesh.hpp"
#include "strb/parallel.hpp"
#include "strb/pod.hpp"
#include "strb/problem.hpp"
#include "strb/rb_core.hpp"
#include "strb/sampling.hpp"
#include "strb/space_fem.hpp"
#include "strb/time_grid.hpp"
#include "strb/validation.hpp"
#include "strb/wspace.hpp"
