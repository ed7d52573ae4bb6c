#pragma once

#include "kpc/errors.hpp"
#include "kpc/types.hpp"
#include "kpc/numeric.hpp"
#include "kpc/parallel.hpp"
#include "kpc/solution_kernel.hpp"
#include "kpc/regularization.hpp"
#include "kpc/geometry.hpp"
#include "kpc/kinematics.hpp"
#include "kpc/verification.hpp"
#include "kpc/rogue_scan.hpp"
#include "kpc/config.hpp"
#include "kpc/export.hpp"
