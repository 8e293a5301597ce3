"""Reference values on the rat clinical chemistry data; skipped unless tests/fixtures/clin.csv exists."""

import numpy as np
import pytest

from robust_mct.cli.commands import main
from robust_mct.cli.ingest import ingest_csv, ingest_endpoints
from robust_mct.mlt.dunnett import colr_dunnett, mlt_dunnett
from robust_mct.mlt.mmm import mmm_dunnett, stack_models
from robust_mct.mlt.model import Link, fit_mlt


def _row(result, label):
    return result.contrasts[result.labels.index(label)]


def test_layout(clin_csv):
    sample = ingest_csv(clin_csv, "CreatKinase")
    assert sample.labels == ["0", "62.5", "125", "250", "500", "1000"]


def test_mlt_creatine_kinase(clin_csv):
    res = mlt_dunnett(fit_mlt(ingest_csv(clin_csv, "CreatKinase"), order=5))
    assert _row(res, "250 - 0").p_adjusted == pytest.approx(0.010, abs=0.01)


def test_mlt_alt(clin_csv):
    res = mlt_dunnett(fit_mlt(ingest_csv(clin_csv, "ALT"), order=5))
    assert _row(res, "250 - 0").p_adjusted < 0.001


def test_colr_creatine_kinase(clin_csv):
    res = colr_dunnett(ingest_csv(clin_csv, "CreatKinase"))
    row = _row(res, "250/0")
    assert row.effect == pytest.approx(12.0, rel=0.25)
    assert row.p_adjusted == pytest.approx(0.016, abs=0.01)
    top = _row(res, "1000/0")
    assert top.effect == pytest.approx(98.0, rel=0.25)
    assert top.p_adjusted < 1e-4


def test_mmm_dominates_univariate(clin_csv):
    samples, _ = ingest_endpoints(clin_csv, ["CreatKinase", "ALT"])
    names = ["CreatKinase", "ALT"]
    models = [fit_mlt(samples[name], link=Link.LOGISTIC) for name in names]
    joint = mmm_dunnett(stack_models(models, names=names), df=np.inf)
    k = models[0].k
    for j, (name, model) in enumerate(zip(names, models)):
        single = colr_dunnett(samples[name], model=model, df=np.inf)
        assert np.all(joint.p_adjusted[j * k : (j + 1) * k] >= single.p_adjusted - 1e-3)


def test_cli_mlt(clin_csv, capsys):
    assert main(["mlt", "--input", clin_csv, "--response", "CreatKinase", "--control", "0", "--format", "json"]) == 0
    assert "250 - 0" in capsys.readouterr().out
