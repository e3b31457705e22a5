/*
   Copyright 2026 The phoncl authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include "phoncl/sampler.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Negative-sampling curricula. A schedule is an ordered list of phases, each
// filtering by the positive sample's group and/or the difficulty bin. Phase
// order encodes the curriculum:
//   R  - one unfiltered phase
//   G  - groups H, M, L, VL
//   P  - difficulty bins easy -> hard (descending ordinal; 0 is hardest)
//   GP - group-major: per group, bins easy -> hard
//   PG - bin-major: per bin easy -> hard, groups H -> VL
// ---------------------------------------------------------------------------

enum class Strategy { R, G, P, PG, GP };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::R: return "R";
    case Strategy::G: return "G";
    case Strategy::P: return "P";
    case Strategy::PG: return "PG";
    case Strategy::GP: return "GP";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "R") return Strategy::R;
  if (s == "G") return Strategy::G;
  if (s == "P") return Strategy::P;
  if (s == "PG") return Strategy::PG;
  if (s == "GP") return Strategy::GP;
  fail(ErrorKind::kValidation, "unknown curriculum strategy '" + std::string(s) + "'");
}

inline constexpr int kAllBins = -1;

struct Phase {
  std::vector<Group> group_filter;  // empty = ALL
  int bin_filter = kAllBins;
  int budget = 0;

  bool matches(const TripletSpec& t) const {
    if (bin_filter != kAllBins && t.bin != bin_filter) return false;
    if (group_filter.empty()) return true;
    return std::find(group_filter.begin(), group_filter.end(), t.positive.group) !=
           group_filter.end();
  }

  std::string describe() const {
    std::string groups = "ALL";
    if (!group_filter.empty()) {
      std::vector<std::string> names;
      for (Group g : group_filter) names.push_back(to_string(g));
      groups = join(names, "+");
    }
    std::string bin = bin_filter == kAllBins ? "ALL" : std::to_string(bin_filter);
    return "(" + groups + ", bin " + bin + ")";
  }
};

struct CurriculumSchedule {
  Strategy strategy = Strategy::R;
  std::string scheme_name;
  std::vector<Phase> phases;
};

// Budget splits equally across phases; the remainder goes to the earliest
// phases one triplet each.
inline CurriculumSchedule make_schedule(Strategy strategy, const DifficultyScheme& scheme,
                                        int epoch_budget) {
  scheme.validate();
  CurriculumSchedule sched;
  sched.strategy = strategy;
  sched.scheme_name = scheme.name;

  const int bins = scheme.bin_count();
  auto easy_to_hard = [bins]() {
    std::vector<int> order;
    for (int b = bins - 1; b >= 0; --b) order.push_back(b);
    return order;
  };

  switch (strategy) {
    case Strategy::R:
      sched.phases.push_back(Phase{});
      break;
    case Strategy::G:
      for (Group g : kDysarthricGroups) sched.phases.push_back(Phase{{g}, kAllBins, 0});
      break;
    case Strategy::P:
      for (int b : easy_to_hard()) sched.phases.push_back(Phase{{}, b, 0});
      break;
    case Strategy::GP:
      for (Group g : kDysarthricGroups) {
        for (int b : easy_to_hard()) sched.phases.push_back(Phase{{g}, b, 0});
      }
      break;
    case Strategy::PG:
      for (int b : easy_to_hard()) {
        for (Group g : kDysarthricGroups) sched.phases.push_back(Phase{{g}, b, 0});
      }
      break;
  }

  int n = static_cast<int>(sched.phases.size());
  if (epoch_budget < n) {
    fail(ErrorKind::kDomain, "epoch budget " + std::to_string(epoch_budget) +
                                 " smaller than phase count " + std::to_string(n));
  }
  int base = epoch_budget / n;
  int rem = epoch_budget % n;
  for (int i = 0; i < n; ++i) {
    sched.phases[static_cast<size_t>(i)].budget = base + (i < rem ? 1 : 0);
  }
  return sched;
}

struct PhaseSample {
  std::vector<TripletSpec> triplets;
  bool with_replacement = false;
};

// Exactly phase.budget triplets matching the phase filters, sampled
// uniformly; smaller pools sample with replacement (flagged).
inline PhaseSample phase_filter(const std::vector<TripletSpec>& triplets, const Phase& phase,
                                uint64_t seed) {
  std::vector<int> pool;
  for (size_t i = 0; i < triplets.size(); ++i) {
    if (phase.matches(triplets[i])) pool.push_back(static_cast<int>(i));
  }
  if (pool.empty()) {
    fail(ErrorKind::kPhaseStarvation, "no triplets match phase " + phase.describe());
  }
  PhaseSample out;
  Rng rng(seed);
  if (phase.budget <= static_cast<int>(pool.size())) {
    for (int j : detail::sample_without_replacement(static_cast<int>(pool.size()), phase.budget, rng)) {
      out.triplets.push_back(triplets[static_cast<size_t>(pool[static_cast<size_t>(j)])]);
    }
  } else {
    out.with_replacement = true;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
    for (int i = 0; i < phase.budget; ++i) {
      out.triplets.push_back(triplets[static_cast<size_t>(pool[static_cast<size_t>(pick(rng))])]);
    }
  }
  return out;
}

inline std::string schedule_dump(const CurriculumSchedule& sched) {
  std::string out = "phase_index, groups, bin, budget\n";
  for (size_t i = 0; i < sched.phases.size(); ++i) {
    const Phase& p = sched.phases[i];
    std::string groups = "ALL";
    if (!p.group_filter.empty()) {
      std::vector<std::string> names;
      for (Group g : p.group_filter) names.push_back(to_string(g));
      groups = join(names, "+");
    }
    out += std::to_string(i) + ", " + groups + ", " +
           (p.bin_filter == kAllBins ? std::string("ALL") : std::to_string(p.bin_filter)) + ", " +
           std::to_string(p.budget) + "\n";
  }
  return out;
}

}  // namespace phoncl
