import json

import numpy as np
import pytest

from smvar.errors import ConfigError
from smvar.expr import evaluate_expression, field_from_expression, parse_expression
from smvar.manifold import build_torus, random_field
from smvar.search1d import golden_section_max, scan_maximize
from smvar.snapshot import load_field, save_field


@pytest.mark.parametrize("text,value", [
    ("1 + 2*3", 7.0), ("2**3", 8.0), ("-x + 1", 1.0), ("sin(pi/2)", 1.0),
    ("exp(0) + cos(0)", 2.0), ("L/2", 0.5), ("e", np.e),
])
def test_grammar_values(text, value):
    out = evaluate_expression(text, np.zeros(3), np.zeros(3), np.zeros(3), 1.0)
    np.testing.assert_allclose(out, value)


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "abs(x)", "[1]", "x if y else z", "q + 1",
                                  "", "1 +", "lambda: 1", "x < y"])
def test_grammar_rejects(text):
    with pytest.raises(ConfigError):
        parse_expression(text)


def test_nonfinite_expression(flat8):
    with pytest.raises(ConfigError):
        field_from_expression(flat8, "1/(x*0)")


def test_field_from_expression_uses_coordinates(flat8):
    u = field_from_expression(flat8, "x + 10*y + 100*z")
    x, y, z = flat8.coordinates()
    np.testing.assert_allclose(u.values, x + 10 * y + 100 * z)
    # x-fastest ordering
    assert u.values[1] - u.values[0] == pytest.approx(1 / 8)


def test_snapshot_round_trip(tmp_path, conformal8, rng):
    u = random_field(conformal8, rng)
    bin_path, meta_path = save_field(tmp_path / "u.bin", conformal8, u)
    assert bin_path.stat().st_size == 8 * 512
    meta = json.loads(meta_path.read_text())
    assert meta["order"] == "x-fastest" and meta["n"] == 8 and meta["conformal"]
    raw = np.fromfile(bin_path, dtype="<f8")
    assert np.array_equal(raw, u.values)
    back = load_field(tmp_path / "u.bin", conformal8)
    assert np.array_equal(back.values, u.values)


def test_snapshot_mismatch(tmp_path, flat8, rng):
    save_field(tmp_path / "u.bin", flat8, random_field(flat8, rng))
    with pytest.raises(ValueError):
        load_field(tmp_path / "u.bin", build_torus(16))


def test_golden_section_finds_parabola_peak():
    x, v = golden_section_max(lambda t: -(t - 1.234) ** 2 + 3.0, 0.0, 5.0)
    # a smooth peak pins the argmax only to about sqrt(machine eps)
    assert x == pytest.approx(1.234, rel=1e-6)
    assert v == pytest.approx(3.0)


def test_scan_picks_global_of_two_bumps():
    fn = lambda s: np.exp(-np.log(s / 0.01) ** 2) + 2 * np.exp(-np.log(s / 50.0) ** 2)
    res = scan_maximize(fn)
    assert res.argmax == pytest.approx(50.0, rel=1e-6)
    assert res.value == pytest.approx(2.0, rel=1e-10)
    assert not res.unbounded_suspect


def test_scan_flags_growth_at_boundary():
    assert scan_maximize(lambda s: np.log1p(s)).unbounded_suspect
