#pragma once

#include "fiscal/config.hpp"
#include "fiscal/dcce.hpp"
#include "fiscal/diagnostics.hpp"
#include "fiscal/distributions.hpp"
#include "fiscal/error.hpp"
#include "fiscal/hp_filter.hpp"
#include "fiscal/ols.hpp"
#include "fiscal/panel.hpp"
#include "fiscal/parallel.hpp"
#include "fiscal/pipeline.hpp"
#include "fiscal/regression_spec.hpp"
#include "fiscal/report.hpp"
#include "fiscal/sustainability.hpp"
#include "fiscal/synthetic.hpp"
#include "fiscal/text.hpp"
