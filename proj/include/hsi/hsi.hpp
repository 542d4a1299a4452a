#pragma once

#include "hsi/admm.hpp"
#include "hsi/coupling.hpp"
#include "hsi/cross_validation.hpp"
#include "hsi/gradient.hpp"
#include "hsi/io.hpp"
#include "hsi/kernel.hpp"
#include "hsi/metrics.hpp"
#include "hsi/multiclass.hpp"
#include "hsi/nu_svc.hpp"
#include "hsi/parallel.hpp"
#include "hsi/periodic_solver.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/random.hpp"
#include "hsi/sigmoid.hpp"
#include "hsi/split.hpp"
#include "hsi/synthetic.hpp"
#include "hsi/types.hpp"
