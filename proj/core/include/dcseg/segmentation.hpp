#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dcseg/simcore.hpp"

namespace dcseg {

/// One HVDC link replacing a corridor of (possibly parallel) AC branches.
/// The template's station buses pick the corridor ends; its modes say which
/// end controls power and which controls DC voltage.
struct LinkReplacement {
  std::vector<std::pair<int, int>> branches;
  HvdcLink link;
};

enum class SetPointRule { MatchAcFlow };

struct SegmentationPlan {
  std::vector<LinkReplacement> links;
  SetPointRule rule = SetPointRule::MatchAcFlow;
};

/// Replaces the planned corridors with HVDC links. The removal must leave
/// one island per region; each island without a slack gets one at the
/// largest-inertia machine bus. Link set points reproduce the AC flows
/// (P and Q at both corridor ends) of the pre-segmentation power flow.
SystemModel segment(const SystemModel& model, const SegmentationPlan& plan);

}  // namespace dcseg
