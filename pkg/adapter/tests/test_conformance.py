"""Replaying the shared fixture suite against the adapter.

The protocol tier is the conformance bar any deployment must clear; the
oracle tier additionally passes here because the annotation-backed
models reproduce the scene annotations exactly.
"""

import json
import shutil
import subprocess

import pytest

from modserve.cli import main
from modserve.registry import CAPABILITIES
from modserve.conformance import (
    CaseOutcome,
    http_transport,
    load_suite,
    run_cases,
    summarize,
)

from serving import SUITE_PATH, annotation_registry, running, write_scenes


@pytest.fixture(scope="module")
def suite():
    return load_suite(SUITE_PATH)


@pytest.fixture(scope="module")
def url(suite, tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes")
    write_scenes(root, suite["scenes"])
    with running(annotation_registry(root)) as base:
        yield base


class TestSharedSuite:
    def test_protocol_tier_passes(self, suite, url):
        outcomes = run_cases(suite, http_transport(url), tiers=("protocol",))
        assert len(outcomes) == 14
        assert all(o.ok for o in outcomes), summarize(outcomes)

    def test_oracle_tier_passes_with_annotation_models(self, suite, url):
        outcomes = run_cases(suite, http_transport(url), tiers=("oracle",))
        assert len(outcomes) == 6
        assert all(o.ok for o in outcomes), summarize(outcomes)

    def test_missing_scene_fails_oracle_but_not_protocol(self, suite, tmp_path):
        # Only living_room_01 in the store: the wildcard-count case
        # targets kitchen_02 and must come back as a failure entry.
        write_scenes(tmp_path, [s for s in suite["scenes"] if s["image_id"] == "living_room_01"])
        with running(annotation_registry(tmp_path)) as base:
            protocol_outcomes = run_cases(suite, http_transport(base), tiers=("protocol",))
            oracle_outcomes = run_cases(suite, http_transport(base), tiers=("oracle",))
        assert all(o.ok for o in protocol_outcomes), summarize(protocol_outcomes)
        failed = [o.name for o in oracle_outcomes if not o.ok]
        assert failed == ["detect-wildcard-all-objects"]


def canned_transport(responses):
    def call(method, path, body):
        return responses[path]

    return call


class TestVerification:
    def test_score_out_of_bounds_is_a_failure_entry(self):
        suite = {
            "version": 1,
            "cases": [{
                "name": "match-bounds", "tier": "protocol", "method": "POST",
                "path": "/match", "body": {},
                "expect": {"status": 200, "scores_len": 1},
            }],
        }
        outcomes = run_cases(suite, canned_transport({"/match": (200, {"scores": [1.3]})}))
        assert not outcomes[0].ok
        assert "outside [0, 1]" in outcomes[0].detail

    def test_missing_health_is_a_failure_entry(self):
        suite = {
            "version": 1,
            "cases": [{
                "name": "health-ok", "tier": "protocol", "method": "GET",
                "path": "/health", "expect": {"status": 200},
            }],
        }
        outcomes = run_cases(suite, canned_transport({"/health": (404, None)}))
        assert not outcomes[0].ok
        assert "status 404" in outcomes[0].detail

    def test_malformed_boxes_are_a_failure_entry(self):
        suite = {
            "version": 1,
            "cases": [{
                "name": "detect", "tier": "protocol", "method": "POST",
                "path": "/detect", "body": {}, "expect": {"status": 200},
            }],
        }
        outcomes = run_cases(
            suite, canned_transport({"/detect": (200, {"boxes": [{"score": 0.5}]})})
        )
        assert not outcomes[0].ok

    def test_exact_mismatch_reports_the_body(self):
        suite = {
            "version": 1,
            "cases": [{
                "name": "exact", "tier": "oracle", "method": "POST",
                "path": "/match", "body": {},
                "expect": {"status": 200, "exact": {"scores": [1.0]}},
            }],
        }
        outcomes = run_cases(suite, canned_transport({"/match": (200, {"scores": [0.9]})}))
        assert not outcomes[0].ok
        assert "differs" in outcomes[0].detail

    def test_error_code_mismatch(self):
        suite = {
            "version": 1,
            "cases": [{
                "name": "wrong-code", "tier": "protocol", "method": "POST",
                "path": "/detect", "body": {},
                "expect": {"status": 404, "error_code": "unknown_image"},
            }],
        }
        body = {"error": {"code": "bad_request", "message": "x"}}
        outcomes = run_cases(suite, canned_transport({"/detect": (404, body)}))
        assert not outcomes[0].ok
        assert "bad_request" in outcomes[0].detail

    def test_transport_errors_become_failure_entries(self):
        def boom(method, path, body):
            raise ConnectionError("refused")

        suite = {
            "version": 1,
            "cases": [{"name": "down", "tier": "protocol", "path": "/health",
                       "method": "GET", "expect": {"status": 200}}],
        }
        outcomes = run_cases(suite, boom)
        assert not outcomes[0].ok
        assert "transport error" in outcomes[0].detail

    def test_tier_filter(self, suite):
        names = [c["name"] for c in suite["cases"]]
        assert len(names) == 20
        protocol_only = run_cases(suite, canned_transport({}), tiers=())
        assert protocol_only == []


def test_load_suite_rejects_other_versions(tmp_path):
    path = tmp_path / "suite.json"
    path.write_text(json.dumps({"version": 2, "cases": []}))
    with pytest.raises(ValueError, match="version"):
        load_suite(path)


def test_summarize_counts_and_lists_failures():
    outcomes = [
        CaseOutcome("a", "protocol", True),
        CaseOutcome("b", "protocol", False, "status 500, wanted 200"),
        CaseOutcome("c", "oracle", True),
    ]
    text = summarize(outcomes)
    assert text.splitlines()[0] == "2/3 conformance cases passed"
    assert "FAIL b [protocol]: status 500, wanted 200" in text


class TestCli:
    def test_conformance_passes_against_a_live_service(self, url, capsys):
        rc = main(["conformance", "--suite", str(SUITE_PATH), "--url", url,
                   "--tiers", "protocol,oracle"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "20/20 conformance cases passed" in out

    def test_conformance_defaults_to_the_protocol_tier(self, url, capsys):
        rc = main(["conformance", "--suite", str(SUITE_PATH), "--url", url])
        assert rc == 0
        assert "14/14" in capsys.readouterr().out

    def test_conformance_fails_nonzero(self, suite, tmp_path, capsys):
        write_scenes(tmp_path, [s for s in suite["scenes"] if s["image_id"] == "living_room_01"])
        with running(annotation_registry(tmp_path)) as base:
            rc = main(["conformance", "--suite", str(SUITE_PATH), "--url", base,
                       "--tiers", "oracle"])
        out = capsys.readouterr().out
        assert rc == 1
        assert "FAIL detect-wildcard-all-objects" in out

    def test_unknown_tier(self, url, capsys):
        rc = main(["conformance", "--suite", str(SUITE_PATH), "--url", url,
                   "--tiers", "fuzz"])
        assert rc == 2
        assert "unknown tiers" in capsys.readouterr().err

    def test_serve_with_a_bad_config_prints_the_diagnostic(self, tmp_path, capsys):
        rc = main(["serve", "--config", str(tmp_path / "missing.json")])
        assert rc == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_serve_reads_the_address_from_the_config(self, tmp_path, capsys):
        (tmp_path / "scenes").mkdir()
        config = {
            "image_store": "scenes",
            "port": 70000,
            "models": {c: {"kind": "annotation"} for c in CAPABILITIES},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        rc = main(["serve", "--config", str(path)])
        assert rc == 1
        assert "port" in capsys.readouterr().err

    def test_serve_flag_overrides_the_config_port(self, tmp_path, capsys):
        (tmp_path / "scenes").mkdir()
        config = {
            "image_store": "scenes",
            "port": 70000,
            "models": {c: {"kind": "annotation"} for c in CAPABILITIES},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        server = {}

        def grab(registry, host, port):
            server["address"] = (host, port)
            raise KeyboardInterrupt

        with pytest.MonkeyPatch.context() as patch:
            patch.setattr("modserve.cli.build_service", grab)
            with pytest.raises(KeyboardInterrupt):
                main(["serve", "--config", str(path), "--port", "0"])
        assert server["address"] == ("127.0.0.1", 0)


@pytest.mark.skipif(shutil.which("modzero") is None, reason="engine CLI not installed")
def test_engine_side_checker_agrees(url):
    result = subprocess.run(
        ["modzero", "conformance", "--suite", str(SUITE_PATH), "--url", url,
         "--tiers", "protocol,oracle"],
        capture_output=True, text=True, timeout=120,
    )
    assert result.returncode == 0, result.stdout + result.stderr
    assert "20/20 conformance cases passed" in result.stdout
