import math

import pytest

from modserve.calibrate import calibrate_confidences, calibrate_similarities, softmax


class TestConfidences:
    def test_in_range_scores_pass_through_untouched(self):
        assert calibrate_confidences([0.0, 0.25, 1.0]) == [0.0, 0.25, 1.0]

    def test_out_of_range_scores_are_min_max_scaled(self):
        assert calibrate_confidences([2.0, 4.0, 6.0]) == [0.0, 0.5, 1.0]

    def test_negative_scores_scale_too(self):
        assert calibrate_confidences([-1.0, 0.0, 3.0]) == [0.0, 0.25, 1.0]

    def test_constant_out_of_range_maps_to_one(self):
        # No ranking information; "detected with top confidence" is the
        # only faithful reading.
        assert calibrate_confidences([7.0, 7.0, 7.0]) == [1.0, 1.0, 1.0]

    def test_single_out_of_range_score(self):
        assert calibrate_confidences([42.0]) == [1.0]

    def test_single_in_range_score(self):
        assert calibrate_confidences([0.3]) == [0.3]

    def test_empty(self):
        assert calibrate_confidences([]) == []

    def test_one_stray_value_rescales_the_whole_response(self):
        out = calibrate_confidences([0.5, 1.5])
        assert out == [0.0, 1.0]


class TestSoftmax:
    def test_sums_to_one_and_preserves_order(self):
        out = softmax([3.0, 1.0, 2.0])
        assert sum(out) == pytest.approx(1.0)
        assert out[0] > out[2] > out[1]

    def test_exact_two_way_values(self):
        out = softmax([2.0, 0.0])
        expected = math.exp(2.0) / (math.exp(2.0) + 1.0)
        assert out[0] == pytest.approx(expected)
        assert out[1] == pytest.approx(1.0 - expected)

    def test_stable_for_large_logits(self):
        assert softmax([1000.0, 1000.0]) == [0.5, 0.5]

    def test_uniform_inputs_are_uniform(self):
        assert softmax([0.0, 0.0, 0.0, 0.0]) == [0.25] * 4

    def test_single_value(self):
        assert softmax([123.0]) == [1.0]

    def test_empty(self):
        assert softmax([]) == []


class TestSimilarities:
    def test_probabilities_pass_through_exactly(self):
        assert calibrate_similarities([1.0, 0.0]) == [1.0, 0.0]

    def test_boundary_values_count_as_in_range(self):
        assert calibrate_similarities([0.0, 1.0, 0.5]) == [0.0, 1.0, 0.5]

    def test_logits_get_softmaxed(self):
        out = calibrate_similarities([4.0, 2.0])
        assert out == softmax([4.0, 2.0])
        assert sum(out) == pytest.approx(1.0)

    def test_any_stray_value_triggers_softmax(self):
        out = calibrate_similarities([0.5, 1.2])
        assert out == softmax([0.5, 1.2])

    def test_empty(self):
        assert calibrate_similarities([]) == []
