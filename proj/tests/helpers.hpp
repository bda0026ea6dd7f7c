#pragma once

#include <vector>

#include "trial.hpp"

namespace testutil {

inline adaptsurv::Subject subj(double entry, double z, double t_event, double censor,
                               int arm = 0) {
  return adaptsurv::Subject::make(entry, adaptsurv::CovariatePath::constant({z}), t_event,
                                  censor, arm);
}

// Three-subject fixture used across the score tests:
//   entries (0, 1, 2), Z = (1, 0, 1), subject 1 events at w = 2.5,
//   subject 2 censored far in the future, subject 3 events at w = 1.2.
inline adaptsurv::TrialData three_subject_trial() {
  std::vector<adaptsurv::Subject> s;
  s.push_back(subj(0.0, 1.0, 2.5, 1000.0, 1));
  s.push_back(subj(1.0, 0.0, 1000.0, 100.0, 0));
  s.push_back(subj(2.0, 1.0, 1.2, 1000.0, 1));
  return adaptsurv::TrialData::build(std::move(s), 2000.0);
}

}  // namespace testutil
