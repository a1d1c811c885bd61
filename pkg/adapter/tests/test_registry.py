import importlib.util
import json
import threading
from contextlib import nullcontext

import pytest

from modserve import pretrained
from modserve.annotations import AnnotationDetector
from modserve.errors import ConfigError, StartupError
from modserve.pretrained import (
    ClipMatcher,
    MaskedLmFiller,
    MdetrGrounder,
    OwlvitDetector,
    RuntimeOptions,
)
from modserve.registry import (
    CAPABILITIES,
    Binding,
    ModelRegistry,
    load_config,
    registry_from_config,
    registry_from_file,
    serve_address,
)
from modserve.store import ImageStore

from serving import annotation_models


def annotation_config(store: str) -> dict:
    return {
        "image_store": store,
        "models": {c: {"kind": "annotation"} for c in CAPABILITIES},
    }


class CountingModel:
    parallel_safe = True

    def __init__(self):
        self.loads = 0

    def load(self):
        self.loads += 1


class FailingModel:
    parallel_safe = True

    def load(self):
        raise StartupError("weights missing")


class TestModelRegistry:
    def test_all_four_capabilities_must_be_bound(self, tmp_path):
        models = annotation_models()
        del models["match"]
        with pytest.raises(ConfigError, match="match"):
            ModelRegistry(models, ImageStore(tmp_path))

    def test_unknown_capability_rejected(self, tmp_path):
        models = annotation_models()
        models["segment"] = AnnotationDetector()
        with pytest.raises(ConfigError, match="segment"):
            ModelRegistry(models, ImageStore(tmp_path))

    def test_readiness_flips_on_warmup(self, tmp_path):
        registry = ModelRegistry(annotation_models(), ImageStore(tmp_path))
        assert registry.readiness() == {c: False for c in CAPABILITIES}
        assert not registry.ready()
        registry.warmup()
        assert registry.readiness() == {c: True for c in CAPABILITIES}
        assert registry.ready()

    def test_load_failure_names_the_capability(self, tmp_path):
        models = annotation_models()
        models["ground"] = FailingModel()
        registry = ModelRegistry(models, ImageStore(tmp_path))
        with pytest.raises(StartupError, match="ground: weights missing"):
            registry.warmup()


class TestBinding:
    def test_ensure_loaded_is_idempotent_under_threads(self):
        model = CountingModel()
        binding = Binding("detect", model)
        barrier = threading.Barrier(8)

        def hit():
            barrier.wait()
            binding.ensure_loaded()

        threads = [threading.Thread(target=hit) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert model.loads == 1
        assert binding.loaded

    def test_parallel_safe_models_skip_the_inference_lock(self):
        binding = Binding("detect", CountingModel())
        assert isinstance(binding.inference(), nullcontext)

    def test_serialized_models_share_the_binding_lock(self):
        binding = Binding("match", ClipMatcher(RuntimeOptions(model_id="x")))
        guard = binding.inference()
        assert guard is binding._lock


class TestConfig:
    def test_registry_from_config(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        registry = registry_from_config(annotation_config("scenes"), base_dir=tmp_path)
        assert registry.store.root == tmp_path / "scenes"
        assert isinstance(registry.binding("detect").model, AnnotationDetector)

    def test_relative_store_resolves_against_the_config_file(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        config_path = tmp_path / "adapter.json"
        config_path.write_text(json.dumps(annotation_config("scenes")))
        registry = registry_from_file(config_path)
        assert registry.store.root == tmp_path / "scenes"

    def test_absolute_store_path_wins(self, tmp_path):
        store = tmp_path / "elsewhere"
        store.mkdir()
        config = annotation_config(str(store))
        registry = registry_from_config(config, base_dir=tmp_path / "unused")
        assert registry.store.root == store

    def test_missing_image_store_key(self, tmp_path):
        with pytest.raises(ConfigError, match="image_store"):
            registry_from_config({"models": {}}, base_dir=tmp_path)

    def test_store_must_be_a_directory(self, tmp_path):
        config = annotation_config("nowhere")
        with pytest.raises(ConfigError, match="not a directory"):
            registry_from_config(config, base_dir=tmp_path)

    def test_missing_models_mapping(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        with pytest.raises(ConfigError, match="models"):
            registry_from_config({"image_store": "scenes"}, base_dir=tmp_path)

    def test_model_entry_needs_a_kind(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        config = annotation_config("scenes")
        config["models"]["detect"] = {}
        with pytest.raises(ConfigError, match="kind"):
            registry_from_config(config, base_dir=tmp_path)

    def test_unknown_kind_lists_the_available_ones(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        config = annotation_config("scenes")
        config["models"]["match"] = {"kind": "resnet"}
        with pytest.raises(ConfigError, match="annotation, clip"):
            registry_from_config(config, base_dir=tmp_path)

    def test_unknown_capability_in_models(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        config = annotation_config("scenes")
        config["models"]["segment"] = {"kind": "annotation"}
        with pytest.raises(ConfigError, match="segment"):
            registry_from_config(config, base_dir=tmp_path)

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")

    def test_load_config_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(ConfigError, match="not JSON"):
            load_config(path)

    def test_load_config_non_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1]")
        with pytest.raises(ConfigError, match="object"):
            load_config(path)

    def test_pretrained_kinds_thread_their_options(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        config = annotation_config("scenes")
        config["models"]["detect"] = {
            "kind": "owlvit",
            "model_id": "custom/owl",
            "device": "cuda:0",
            "precision": "float16",
        }
        config["models"]["match"] = {"kind": "clip"}
        registry = registry_from_config(config, base_dir=tmp_path)
        detector = registry.binding("detect").model
        assert isinstance(detector, OwlvitDetector)
        assert detector.options == RuntimeOptions("custom/owl", "cuda:0", "float16")
        matcher = registry.binding("match").model
        assert isinstance(matcher, ClipMatcher)
        assert matcher.options.model_id == ClipMatcher.DEFAULT_MODEL


class TestServeAddress:
    def test_config_values_are_used(self):
        assert serve_address({"host": "0.0.0.0", "port": 9000}) == ("0.0.0.0", 9000)

    def test_explicit_arguments_win(self):
        config = {"host": "0.0.0.0", "port": 9000}
        assert serve_address(config, host="::1", port=8151) == ("::1", 8151)

    def test_defaults_when_config_is_silent(self):
        assert serve_address({}) == ("127.0.0.1", 8801)

    def test_port_zero_means_ephemeral(self):
        assert serve_address({"port": 0}) == ("127.0.0.1", 0)

    @pytest.mark.parametrize("port", ["8801", 8801.0, True, -1, 65536])
    def test_bad_port_is_rejected(self, port):
        with pytest.raises(ConfigError, match="port"):
            serve_address({"port": port})

    @pytest.mark.parametrize("host", ["", 12, None])
    def test_bad_host_is_rejected(self, host):
        with pytest.raises(ConfigError, match="host"):
            serve_address({"host": host})


class TestPretrainedWrappers:
    def test_runtime_options_defaults(self):
        options = RuntimeOptions.from_config({}, "default/model")
        assert options == RuntimeOptions("default/model", "cpu", "float32")

    @pytest.mark.parametrize(
        "cls", [OwlvitDetector, ClipMatcher, MaskedLmFiller, MdetrGrounder]
    )
    def test_construction_is_import_free(self, cls):
        model = cls(RuntimeOptions(model_id="anything"))
        assert model.parallel_safe is False

    def test_load_without_the_dependency_is_a_startup_error(self, monkeypatch):
        real_find_spec = importlib.util.find_spec

        def missing_transformers(name, *args, **kwargs):
            if name == "transformers":
                return None
            return real_find_spec(name, *args, **kwargs)

        monkeypatch.setattr(importlib.util, "find_spec", missing_transformers)
        detector = OwlvitDetector(RuntimeOptions(model_id="x"))
        with pytest.raises(StartupError, match="transformers"):
            detector.load()

    def test_inference_before_load_is_a_startup_error(self):
        filler = MaskedLmFiller(RuntimeOptions(model_id="x"))
        with pytest.raises(StartupError, match="before load"):
            filler.filter_answers("the color is [MASK]", ["red"], 1)
