#include "tacseg/trigger.hpp"

#include "tacseg/errors.hpp"
#include "tacseg/segmenter.hpp"

namespace tacseg {

IntervalSet detect_trigger_intervals(const Mat& ft_features, const SeqModel& model, int window, int stride) {
    if (model.config().num_classes != static_cast<int>(trigger_vocabulary().size()))
        fail(ErrorCode::VocabularyMismatch, "trigger model must have 4 classes, got " +
                                                std::to_string(model.config().num_classes));
    if (ft_features.rows() == 0) return {};
    return intervals_from_labels(segment(model, ft_features, window, stride).labels);
}

}  // namespace tacseg
