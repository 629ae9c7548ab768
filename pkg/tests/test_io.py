import json
from fractions import Fraction

import numpy as np
import pytest

from tightwin import SolverTrace, Status, spectrum
from tightwin import io as tio


def _wf(**kw):
    base = dict(coeffs=np.array([0.1, -0.25, 1 / 3, 2.0]), K=4, a=2, M=4, p=0.25, lam=2.0)
    base.update(kw)
    return tio.WindowFile(**base)


def test_window_json_round_trip_is_exact(tmp_path):
    wf = _wf(p_fraction="1/4")
    path = tio.write_window_json(tmp_path / "w.json", wf)
    back = tio.read_window(path)
    assert np.array_equal(back.coeffs, wf.coeffs)
    assert (back.K, back.a, back.M, back.p, back.lam, back.p_fraction) == (4, 2, 4, 0.25, 2.0, "1/4")
    assert tio.schema_check(path) == "window"


def test_window_json_nulls(tmp_path):
    path = tio.write_window_json(tmp_path / "w.json", _wf(p=None, lam=None))
    obj = json.loads(path.read_text())
    assert obj["p"] is None and obj["lambda"] is None and "p_fraction" not in obj
    tio.schema_check(path)


def test_window_csv_round_trip(tmp_path):
    w = np.random.default_rng(0).standard_normal(7)
    path = tio.write_window_csv(tmp_path / "w.csv", w)
    assert len(path.read_text().splitlines()) == 7
    assert np.array_equal(tio.read_window_csv(path), w)
    assert tio.schema_check(path) == "window_csv"


@pytest.mark.parametrize(
    "mutate",
    [
        lambda o: o.pop("coeffs"),
        lambda o: o.update(K=5),
        lambda o: o.update(K=0),
        lambda o: o.update(coeffs=["x"] * 4),
        lambda o: o.update(extra=1),
        lambda o: o.update(p_fraction="0.25"),
    ],
)
def test_invalid_window_json(tmp_path, mutate):
    path = tio.write_window_json(tmp_path / "w.json", _wf())
    obj = json.loads(path.read_text())
    mutate(obj)
    path.write_text(json.dumps(obj))
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)


def test_spectrum_csv(tmp_path):
    path = tio.write_spectrum_csv(tmp_path / "s.csv", spectrum(np.hanning(8), 32))
    lines = path.read_text().splitlines()
    assert lines[0] == "freq_cycles_per_sample,freq_nyquist_normalized,magnitude_db"
    assert len(lines) == 33
    assert tio.schema_check(path) == "spectrum"


def test_trace_csv(tmp_path):
    tr = SolverTrace(grad_norms=[1.0, 1e-3, 1e-16], objective=[-0.4, -0.45, -0.5], iterations=2)
    path = tio.write_trace_csv(tmp_path / "trace_p3_64.csv", tr)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,grad_norm,objective"
    assert lines[3] == "2,1e-16,-0.5"
    assert tio.schema_check(path) == "trace"


def test_summary_csv(tmp_path):
    rows = [dict(p_numerator=1, iterations=2, status=Status.CONVERGED.value,
                 concentration=0.9, sidelobe_energy=0.1)]
    path = tio.write_summary_csv(tmp_path / "summary.csv", rows)
    assert path.read_text().splitlines()[0] == (
        "p_numerator,iterations,status,concentration,sidelobe_energy"
    )
    assert tio.schema_check(path) == "summary"
    path.write_text(path.read_text().replace("Converged", "Done"))
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)


def test_csv_bad_rows(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("iter,grad_norm,objective\n0,1.0\n")
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)
    path.write_text("iter,grad_norm,objective\n")
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)
    path.write_text("1.0\nabc\n")
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)


def test_metrics_and_unknown_json(tmp_path):
    path = tio.write_json(tmp_path / "m.json", dict(p=0.1, concentration=0.9,
                                                    sidelobe_energy=0.1, is_tight=True,
                                                    **{"lambda": 4.0}))
    assert tio.schema_check(path) == "metrics"
    path.write_text(json.dumps({"hello": 1}))
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)
    path.write_text("{not json")
    with pytest.raises(tio.SchemaError):
        tio.schema_check(path)
    with pytest.raises(tio.SchemaError):
        tio.schema_check(tmp_path / "x.txt")


def test_p_label():
    assert tio.p_label(Fraction(14, 512), 512) == "14_512"
    assert tio.p_label(14 / 512, 512) == "14_512"
    assert tio.p_label(0.1, 64) == "6d4_64"


def test_nan_rejected(tmp_path):
    with pytest.raises(ValueError):
        tio.write_json(tmp_path / "m.json", {"x": float("nan")})
