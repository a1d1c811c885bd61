"""End-to-end service behavior over real HTTP."""

import json
import math

import numpy as np
import pytest
import requests
from PIL import Image

from modserve.annotations import AnnotationMatcher
from modserve.errors import StartupError
from modserve.regions import apply_region
from modserve.registry import CAPABILITIES, ModelRegistry
from modserve.store import ImageStore

from serving import (
    SUITE_PATH,
    annotation_models,
    annotation_registry,
    running,
    write_scenes,
)

CAT_BOX = {"x": 0.15, "y": 0.35, "w": 0.18, "h": 0.25}
SOFA_BOX = {"x": 0.05, "y": 0.55, "w": 0.5, "h": 0.4}

BLACK_INTENTS = [
    {"kind": "has_attribute", "attribute": "black", "negated": False},
    {"kind": "has_attribute", "attribute": "black", "negated": True},
]


@pytest.fixture(scope="module")
def url(tmp_path_factory):
    with open(SUITE_PATH, encoding="utf-8") as fh:
        suite = json.load(fh)
    root = tmp_path_factory.mktemp("scenes")
    write_scenes(root, suite["scenes"])
    with running(annotation_registry(root)) as base:
        yield base


def post(url, path, body):
    return requests.post(f"{url}{path}", json=body, timeout=10)


class TestHealth:
    def test_warm_service_reports_ok(self, url):
        body = requests.get(f"{url}/health", timeout=10).json()
        assert body["status"] == "ok"
        assert body["capabilities"] == list(CAPABILITIES)
        assert body["readiness"] == {c: True for c in CAPABILITIES}

    def test_lazy_service_reports_loading_until_every_model_is_used(self, tmp_path):
        with open(SUITE_PATH, encoding="utf-8") as fh:
            suite = json.load(fh)
        write_scenes(tmp_path, suite["scenes"])
        with running(annotation_registry(tmp_path), warm=False) as base:
            body = requests.get(f"{base}/health", timeout=10).json()
            assert body == {
                "status": "loading",
                "capabilities": [],
                "readiness": {c: False for c in CAPABILITIES},
            }
            post(base, "/detect", {"image_id": "living_room_01", "object": "cat"})
            body = requests.get(f"{base}/health", timeout=10).json()
            assert body["status"] == "loading"
            assert body["capabilities"] == ["detect"]
            post(base, "/ground", {
                "image_id": "living_room_01", "sentence": "the cat",
                "ref": {"head": "cat", "attributes": []},
            })
            post(base, "/match", {
                "image_id": "living_room_01",
                "region": {"op": "crop", "boxes": [CAT_BOX]},
                "texts": ["a", "b"], "intents": BLACK_INTENTS,
            })
            post(base, "/filter_answers", {"template": "t", "candidates": [], "k": 0})
            body = requests.get(f"{base}/health", timeout=10).json()
            assert body["status"] == "ok"
            assert body["readiness"] == {c: True for c in CAPABILITIES}


class TestDetect:
    def test_known_object_comes_back_with_its_annotated_box(self, url):
        response = post(url, "/detect", {"image_id": "living_room_01", "object": "cat"})
        assert response.status_code == 200
        assert response.json() == {"boxes": [{"box": CAT_BOX, "score": 1.0}]}

    def test_wildcard_returns_all_objects(self, url):
        response = post(url, "/detect", {"image_id": "kitchen_02", "object": "object"})
        assert len(response.json()["boxes"]) == 6

    def test_absent_object_is_an_empty_list(self, url):
        response = post(url, "/detect", {"image_id": "living_room_01", "object": "unicorn"})
        assert response.status_code == 200
        assert response.json() == {"boxes": []}

    def test_unknown_image(self, url):
        response = post(url, "/detect", {"image_id": "no_such_image", "object": "cat"})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "unknown_image"

    def test_missing_field(self, url):
        response = post(url, "/detect", {"image_id": "living_room_01"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "bad_request"

    def test_non_object_body(self, url):
        response = post(url, "/detect", 42)
        assert response.status_code == 400

    def test_unparseable_body(self, url):
        response = requests.post(
            f"{url}/detect", data=b"{nope",
            headers={"Content-Type": "application/json"}, timeout=10,
        )
        assert response.status_code == 400
        assert response.json()["error"]["message"] == "body is not JSON"


class TestGround:
    def test_composite_reference(self, url):
        response = post(url, "/ground", {
            "image_id": "living_room_01",
            "sentence": "the red object on the sofa",
            "ref": {
                "head": "object",
                "attributes": ["red"],
                "link": {"relation": "on", "target": {"head": "sofa", "attributes": []}},
            },
        })
        assert response.status_code == 200
        boxes = response.json()["boxes"]
        assert len(boxes) == 1
        assert boxes[0]["box"] == {"x": 0.4, "y": 0.62, "w": 0.08, "h": 0.06}

    def test_missing_sentence(self, url):
        response = post(url, "/ground", {
            "image_id": "living_room_01",
            "ref": {"head": "cat", "attributes": []},
        })
        assert response.status_code == 400

    def test_annotation_grounder_requires_the_ref(self, url):
        response = post(url, "/ground", {
            "image_id": "living_room_01", "sentence": "the red thing",
        })
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "needs_structured"

    def test_malformed_ref(self, url):
        response = post(url, "/ground", {
            "image_id": "living_room_01", "sentence": "x", "ref": {"attributes": []},
        })
        assert response.status_code == 400


class TestMatch:
    def test_attribute_pair(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "crop", "boxes": [CAT_BOX]},
            "texts": ["the cat is black", "the cat is not black"],
            "intents": BLACK_INTENTS,
        })
        assert response.status_code == 200
        assert response.json() == {"scores": [1.0, 0.0]}

    def test_empty_texts(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "crop", "boxes": [CAT_BOX]},
            "texts": [],
        })
        assert response.status_code == 400

    def test_crop_with_two_boxes(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "crop", "boxes": [CAT_BOX, SOFA_BOX]},
            "texts": ["a"],
        })
        assert response.status_code == 400

    def test_unknown_region_op(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "blur", "boxes": [CAT_BOX]},
            "texts": ["a"],
        })
        assert response.status_code == 400

    def test_intent_count_must_match_texts(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "crop", "boxes": [CAT_BOX]},
            "texts": ["a", "b"],
            "intents": BLACK_INTENTS[:1],
        })
        assert response.status_code == 400

    def test_unknown_intent_kind(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "crop", "boxes": [CAT_BOX]},
            "texts": ["a"],
            "intents": [{"kind": "is_cute"}],
        })
        assert response.status_code == 400

    def test_annotation_matcher_requires_intents(self, url):
        response = post(url, "/match", {
            "image_id": "living_room_01",
            "region": {"op": "crop", "boxes": [CAT_BOX]},
            "texts": ["the cat is black"],
        })
        assert response.status_code == 422


class TestFilterAnswers:
    def test_top_k_prefix(self, url):
        response = post(url, "/filter_answers", {
            "template": "the color of the cat is [MASK]",
            "candidates": ["black", "white", "red"],
            "k": 2,
        })
        assert response.json() == {"answers": ["black", "white"]}

    def test_negative_k(self, url):
        response = post(url, "/filter_answers", {
            "template": "t", "candidates": ["a"], "k": -1,
        })
        assert response.status_code == 400

    def test_boolean_k_is_rejected(self, url):
        response = post(url, "/filter_answers", {
            "template": "t", "candidates": ["a"], "k": True,
        })
        assert response.status_code == 400


class TestRouting:
    def test_unknown_post_route(self, url):
        response = post(url, "/segment", {"image_id": "living_room_01"})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "bad_request"

    def test_unknown_get_route(self, url):
        response = requests.get(f"{url}/metrics", timeout=10)
        assert response.status_code == 404

    def test_put_and_delete_are_not_supported(self, url):
        assert requests.put(f"{url}/detect", json={}, timeout=10).status_code == 405
        assert requests.delete(f"{url}/detect", timeout=10).status_code == 405


class StubDetector:
    """Raw confidences outside [0, 1], as a real detector head emits."""

    parallel_safe = True

    def __init__(self, scores):
        self.scores = scores

    def load(self):
        pass

    def detect(self, handle, object_name):
        box = {"x": 0.1, "y": 0.1, "w": 0.2, "h": 0.2}
        return [(box, s) for s in self.scores]


class StubMatcher:
    parallel_safe = True

    def __init__(self, scores):
        self.scores = scores

    def load(self):
        pass

    def match(self, handle, region, texts, intents):
        return list(self.scores)


class FailingLoadModel:
    parallel_safe = True

    def load(self):
        raise StartupError("checkpoint download failed")

    def detect(self, handle, object_name):
        return []


def stub_registry(tmp_path, **overrides):
    with open(SUITE_PATH, encoding="utf-8") as fh:
        suite = json.load(fh)
    write_scenes(tmp_path, suite["scenes"])
    models = annotation_models()
    models.update(overrides)
    return ModelRegistry(models, ImageStore(tmp_path))


class TestBoundaryCalibration:
    def test_out_of_range_confidences_are_min_max_scaled(self, tmp_path):
        registry = stub_registry(tmp_path, detect=StubDetector([2.0, 4.0]))
        with running(registry) as base:
            body = post(base, "/detect", {"image_id": "living_room_01", "object": "x"}).json()
            assert [b["score"] for b in body["boxes"]] == [0.0, 1.0]

    def test_out_of_range_similarities_are_softmaxed(self, tmp_path):
        registry = stub_registry(tmp_path, match=StubMatcher([3.0, 1.0]))
        with running(registry) as base:
            body = post(base, "/match", {
                "image_id": "living_room_01",
                "region": {"op": "crop", "boxes": [CAT_BOX]},
                "texts": ["a", "b"],
            }).json()
            expected = math.exp(2.0) / (math.exp(2.0) + 1.0)
            assert body["scores"][0] == pytest.approx(expected)
            assert sum(body["scores"]) == pytest.approx(1.0)

    def test_probability_scores_pass_through_untouched(self, tmp_path):
        registry = stub_registry(tmp_path, match=StubMatcher([0.25, 0.5]))
        with running(registry) as base:
            body = post(base, "/match", {
                "image_id": "living_room_01",
                "region": {"op": "crop", "boxes": [CAT_BOX]},
                "texts": ["a", "b"],
            }).json()
            assert body["scores"] == [0.25, 0.5]


class TestFailures:
    def test_model_load_failure_is_a_500_with_the_diagnostic(self, tmp_path):
        registry = stub_registry(tmp_path, detect=FailingLoadModel())
        with running(registry, warm=False) as base:
            response = post(base, "/detect", {"image_id": "living_room_01", "object": "x"})
            assert response.status_code == 500
            error = response.json()["error"]
            assert error["code"] == "internal"
            assert "detect: checkpoint download failed" in error["message"]

    def test_broken_scene_file_is_a_500(self, tmp_path):
        (tmp_path / "living_room_01.json").write_text('{"image_id": "living_room_01"}')
        registry = ModelRegistry(annotation_models(), ImageStore(tmp_path))
        with running(registry) as base:
            response = post(base, "/detect", {"image_id": "living_room_01", "object": "x"})
            assert response.status_code == 500
            assert response.json()["error"]["code"] == "internal"


class MeanBrightnessMatcher:
    """Pixel-consuming test model: scores are the mean brightness of the
    region the service hands over, one per text."""

    parallel_safe = True

    def load(self):
        pass

    def match(self, handle, region, texts, intents):
        pixels = apply_region(handle.pixels(), region)
        score = float(pixels.mean()) / 255.0
        return [score] * len(texts)


class TestPixelPath:
    @pytest.fixture()
    def pixel_url(self, tmp_path):
        # 20x10, white band in columns 5..15, black elsewhere.
        arr = np.zeros((10, 20), dtype=np.uint8)
        arr[:, 5:15] = 255
        Image.fromarray(arr, mode="L").save(tmp_path / "band_01.png")
        models = annotation_models()
        models["match"] = MeanBrightnessMatcher()
        registry = ModelRegistry(models, ImageStore(tmp_path))
        with running(registry) as base:
            yield base

    def test_crop_region_reaches_the_model_cropped(self, pixel_url):
        body = post(pixel_url, "/match", {
            "image_id": "band_01",
            "region": {"op": "crop", "boxes": [{"x": 0.25, "y": 0.0, "w": 0.5, "h": 1.0}]},
            "texts": ["bright"],
        }).json()
        assert body["scores"] == [1.0]

    def test_mask_keep_blacks_out_the_rest(self, pixel_url):
        body = post(pixel_url, "/match", {
            "image_id": "band_01",
            "region": {
                "op": "mask_keep",
                "boxes": [
                    {"x": 0.25, "y": 0.0, "w": 0.5, "h": 1.0},
                    {"x": 0.0, "y": 0.0, "w": 0.25, "h": 1.0},
                ],
            },
            "texts": ["half bright"],
        }).json()
        assert body["scores"] == [0.5]

    def test_degenerate_region_is_a_400(self, pixel_url):
        response = post(pixel_url, "/match", {
            "image_id": "band_01",
            "region": {"op": "crop", "boxes": [{"x": 0.5, "y": 0.5, "w": 0.001, "h": 0.001}]},
            "texts": ["x"],
        })
        assert response.status_code == 400
        assert "covers no pixels" in response.json()["error"]["message"]
