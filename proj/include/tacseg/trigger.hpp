#pragma once

#include "tacseg/model.hpp"
#include "tacseg/windows.hpp"
#include "tacseg/wrench.hpp"

namespace tacseg {

/// Segments a normalized T×6 F/T sequence with a 4-class trigger model and
/// returns the runs of pull/lock/release frames. Throws VocabularyMismatch
/// unless the model has exactly 4 classes.
IntervalSet detect_trigger_intervals(const Mat& ft_features, const SeqModel& model, int window = kDefaultWindow,
                                     int stride = kDefaultStride);

}  // namespace tacseg
