"""Tests for spatial_sieve.database.layer."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import pandas as pd
import pytest

from spatial_sieve.database import layer
from spatial_sieve.ext import exceptions
from spatial_sieve.stats import experiments

BIG_SEED = 2**63 + 12345


def _result(kind="coverage"):
    spec = {"seed": BIG_SEED, "d": 1, "areas": [40, 80], "replications": 2, "targets": [[0.0]]}
    config = experiments.coverage_config_from_dict(spec)
    replications = pd.DataFrame({
        "rung": [0, 0, 1, 1],
        "replication": [0, 1, 0, 1],
        "area": [40.0, 40.0, 80.0, 80.0],
        "n": [40, 40, 80, 80],
        "j": [4, 4, 4, 4],
        "sup_error": [0.4, 0.5, 0.3, 0.35],
        "l2_error": [0.2, 0.25, 0.15, 0.1],
        "covered": [[True], [False], [True], [True]],
        "width": [[0.9], [0.8], [0.7], [0.6]],
        "clamped": [0, 0, 0, 0],
    })
    rungs = pd.DataFrame({"rung": [0, 1], "area": [40.0, 80.0], "mean_l2_error": [0.225, 0.125]})
    return experiments.StudyResult(kind=kind,
                                   config=config,
                                   replications=replications,
                                   rungs=rungs,
                                   coverage=None,
                                   slopes={
                                       "sup": None,
                                       "l2": {
                                           "slope": -0.85,
                                           "stderr": float("nan"),
                                           "intercept": 1.0
                                       }
                                   })


@pytest.fixture
def ledger(tmp_path):
    with layer.ResultLedger.connect(f"sqlite:///{tmp_path / 'results.db'}") as opened:
        yield opened


def test_record_and_load(ledger):
    study_id = ledger.record_study(_result())
    ledger.commit()
    stored = ledger.load_study(study_id)
    assert stored["kind"] == "coverage"
    assert stored["seed"] == BIG_SEED
    assert stored["config"]["replications"] == 2
    assert stored["report"]["slopes"]["l2"]["stderr"] is None
    assert len(stored["replications"]) == 4
    first = stored["replications"][0]
    assert first["covered"] == [True]
    assert first["width"] == [0.9]


def test_list_studies(ledger):
    first = ledger.record_study(_result())
    second = ledger.record_study(_result("rate"))
    ledger.commit()
    assert ledger.list_studies() == [(first, "coverage", BIG_SEED), (second, "rate", BIG_SEED)]


def test_rollback_discards_uncommitted_studies(ledger):
    ledger.record_study(_result())
    ledger.rollback()
    assert not ledger.list_studies()


def test_unknown_study(ledger):
    with pytest.raises(exceptions.ArtifactError):
        ledger.load_study(99)


def test_bad_url_is_an_artifact_error():
    with pytest.raises(exceptions.ArtifactError):
        layer.ResultLedger.connect("notadialect://nowhere")
