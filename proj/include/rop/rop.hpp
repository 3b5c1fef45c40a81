#pragma once

// Umbrella header for the rOP meta-analysis library.

#include "rop/combine.hpp"
#include "rop/dist.hpp"
#include "rop/error.hpp"
#include "rop/fdr.hpp"
#include "rop/gene_sets.hpp"
#include "rop/io.hpp"
#include "rop/mvn.hpp"
#include "rop/permutation.hpp"
#include "rop/pipeline.hpp"
#include "rop/power.hpp"
#include "rop/rng.hpp"
#include "rop/select_r.hpp"
#include "rop/simulate.hpp"
#include "rop/stat_tests.hpp"
#include "rop/study.hpp"
