#pragma once

#include "emgda/core.hpp"
#include "emgda/signals.hpp"
#include "emgda/kernels.hpp"
#include "emgda/lssvm.hpp"
#include "emgda/sources.hpp"
#include "emgda/modelsel.hpp"
#include "emgda/baselines.hpp"
#include "emgda/adapt_ma.hpp"
#include "emgda/adapt_mkal.hpp"
#include "emgda/adapt_hl2l.hpp"
#include "emgda/methods.hpp"
#include "emgda/synth.hpp"
#include "emgda/analysis.hpp"
#include "emgda/harness.hpp"
#include "emgda/io.hpp"
#include "emgda/serialize.hpp"
