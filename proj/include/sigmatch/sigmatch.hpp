#pragma once

#include "sigmatch/analytics.hpp"
#include "sigmatch/core.hpp"
#include "sigmatch/fixed_point.hpp"
#include "sigmatch/harness.hpp"
#include "sigmatch/market.hpp"
#include "sigmatch/matching.hpp"
#include "sigmatch/rejection_chains.hpp"
#include "sigmatch/seeded_plan.hpp"
#include "sigmatch/serialization.hpp"
#include "sigmatch/signal.hpp"
#include "sigmatch/stable_partners.hpp"
