#pragma once

#include "plurigreen/core/domain.hpp"
#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/grid.hpp"
#include "plurigreen/core/hermitian.hpp"
#include "plurigreen/core/hessian.hpp"
#include "plurigreen/singularity/cutoff.hpp"
#include "plurigreen/singularity/polynomial.hpp"
#include "plurigreen/singularity/singularity.hpp"
#include "plurigreen/hcma/problem.hpp"
#include "plurigreen/hcma/assemble.hpp"
#include "plurigreen/hcma/envelope.hpp"
#include "plurigreen/hcma/regularized.hpp"
#include "plurigreen/hcma/uniqueness.hpp"
#include "plurigreen/measure/ma_measure.hpp"
#include "plurigreen/blowup/blowup.hpp"
#include "plurigreen/apps/torus.hpp"
#include "plurigreen/apps/ray.hpp"
#include "plurigreen/io/config.hpp"
#include "plurigreen/io/output.hpp"
#include "plurigreen/io/verify.hpp"
#include "plurigreen/io/run.hpp"
