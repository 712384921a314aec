import csv
import json
import textwrap
from pathlib import Path

import numpy as np
import pytest

from glharmonic.cli import main, run
from glharmonic.config import apply_overrides, load_config
from glharmonic.errors import ConfigError, SingularLocusError
from glharmonic.glmetric import LEVI_CIVITA, gl_eval
from glharmonic.scenarios import (
    build_field_equation_scenario,
    build_orbit_scenario,
    build_pfaff_scenario,
    build_pseudolinear_scenario,
    execute,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def scenario(text):
    return load_config("inline.yaml", text=textwrap.dedent(text))[0]


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


ORBIT = """
    name: orbit
    kind: orbit
    params:
      field: {type: rotation}
      x0: [1.0, 0.0]
"""


# configuration ------------------------------------------------------------------


def test_defaults_are_recorded():
    cfg = scenario(ORBIT)
    assert cfg.domain == {"lo": [0.0], "hi": [2 * np.pi], "grid": 2000}
    assert "params.perturbations" in cfg.defaults_used and "domain" in cfg.defaults_used
    assert "params.field" not in cfg.defaults_used


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("name: a\nkind: orbitz\n", 2, "unknown scenario kind"),
        ("name: a\nkind: orbit\ndomain:\n  lo: [0]\n  hi: [1]\n  grid: 2\n", 6, "grid"),
        ("name: a\nkind: pfaff\ntolerances:\n  residual: -1\n", 4, "positive"),
        ("name: a\nkind: pfaff\ntolerances:\n  bogus: 1\n", 4, "unknown tolerance"),
        ("name: a\nkind: pfaff\nextra: 1\n", 3, "unknown key"),
        ("name: a\nkind: pfaff\ndomain:\n  lo: [0, 0]\n  hi: [1, 0]\n  grid: 5\n", 5, "hi > lo"),
        ("name: a\nkind: [pfaff\n", 3, "YAML"),
    ],
)
def test_structural_errors_are_line_anchored(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        load_config("x.yaml", text=text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}:")


def test_duplicate_names_rejected():
    with pytest.raises(ConfigError, match="unique"):
        load_config("x.yaml", text="scenarios:\n  - {name: a, kind: pfaff}\n  - {name: a, kind: pfaff}\n")


def test_overrides():
    cfg = apply_overrides(scenario(ORBIT), grid=101, tol=1e-3)
    assert cfg.domain["grid"] == 101
    assert set(cfg.tolerances.values()) == {1e-3}
    with pytest.raises(ConfigError):
        apply_overrides(cfg, grid=2)


# builders -----------------------------------------------------------------------


def test_orbit_builder_rotation():
    sc = build_orbit_scenario(scenario(ORBIT))
    x = np.array([0.6, 0.8])
    np.testing.assert_allclose(sc.T([0.0], x), [[-0.8], [0.6]])
    np.testing.assert_allclose(sc.solution([np.pi / 2]), [0.0, 1.0], atol=1e-15)


def test_orbit_builder_constant_field_metric():
    sc = build_orbit_scenario(scenario("""
        kind: orbit
        params:
          field: {type: constant, vector: [1.0, 0.0]}
          x0: [0.0, 0.0]
    """))
    y = np.array([2.0, 1.0])
    np.testing.assert_allclose(gl_eval(sc.h, [0.3, 0.1], y), np.eye(2) / 4.0)
    with pytest.raises(SingularLocusError):
        gl_eval(sc.h, [0.3, 0.1], [0.0, 1.0])
    np.testing.assert_allclose(sc.solution([1.0]), [1.0, 0.0])


def test_orbit_builder_affine_flow_matches_expm():
    cfg = scenario("""
        kind: orbit
        domain: {lo: [0.0], hi: [1.0], grid: 201}
        params:
          field: {type: affine, matrix: [[0.0, 1.0], [-2.0, -0.1]], offset: [0.5, 0.0]}
          x0: [1.0, 0.0]
          perturbations: 0
    """)
    sc = build_orbit_scenario(cfg)
    from glharmonic.flows import integrate_orbit

    numeric = integrate_orbit(sc.xi, sc.x0, (0.0, 1.0), 1000)
    np.testing.assert_allclose(sc.solution([1.0]), numeric.states[-1], atol=1e-10)
    report = execute(cfg, sc)
    assert report.passed, report.render_text()


def test_orbit_builder_rejects_vanishing_field():
    with pytest.raises(ConfigError, match="vanishes"):
        build_orbit_scenario(scenario(ORBIT.replace("[1.0, 0.0]", "[0.0, 0.0]")))


def test_pfaff_unit_form():
    sc = build_pfaff_scenario(scenario("""
        kind: pfaff
        params:
          form: {type: affine, offset: [1.0, 0.0]}
    """))
    np.testing.assert_array_equal(sc.g([0.3, 0.2]), np.eye(2))
    assert sc.sharp([0.3, 0.2]) == [1.0, 0.0]
    assert sc.closed


def test_pfaff_rejects_vanishing_form():
    with pytest.raises(ConfigError, match="vanishes"):
        build_pfaff_scenario(scenario("""
            kind: pfaff
            params:
              form: {type: affine, matrix: [[1.0, 0.0], [0.0, 1.0]]}
        """))


def test_pfaff_exact_and_nonclosed_reports():
    exact = execute(scenario("""
        kind: pfaff
        params:
          form: {type: affine, offset: [1.0, 2.0]}
    """))
    assert exact.passed
    assert abs(exact.values["L_A(potential)"] - exact.values["half_volume"]) < 1e-8
    nonclosed = execute(scenario("""
        kind: pfaff
        domain: {lo: [0.0, 0.5], hi: [1.0, 1.5], grid: 21}
        params:
          form: {type: affine, matrix: [[0.0, 1.0], [0.0, 0.0]]}
    """))
    assert nonclosed.passed
    gaps = nonclosed.tables["candidates"]["gap"]
    assert len(gaps) == 11 and np.all(gaps > 1e-6)


def test_pseudolinear_exponential_and_quotient():
    for form in ("form: exp\n  v: [1.0, 2.0]", "form: quotient\n  v: [1.0, 0.0]\n  v2: [0.0, 1.0]\n  w2: 2.0"):
        cfg = scenario("kind: pseudolinear\nparams:\n  " + form + "\n")
        sc = build_pseudolinear_scenario(cfg)
        report = execute(cfg, sc)
        assert report.values["system_residual_max"] < 1e-9
        assert report.values["second_fundamental_form_max"] < 1e-9
        assert report.passed


@pytest.mark.parametrize(
    "params,fragment",
    [
        ("form: exp\n  v: [0.0, 0.0]", "gradient"),
        ("form: quotient\n  v: [1.0, 0.0]\n  v2: [0.0, 1.0]\n  w2: -0.5", "denominator"),
        ("form: cubic\n  v: [1.0, 0.0]", "unknown pseudolinear form"),
        ("form: exp\n  v: [1.0]", "2 entries"),
    ],
)
def test_pseudolinear_rejections(params, fragment):
    with pytest.raises(ConfigError, match=fragment):
        build_pseudolinear_scenario(scenario("kind: pseudolinear\nparams:\n  " + params + "\n"))


def test_field_equation_margin_filters_samples():
    sc = build_field_equation_scenario(scenario("""
        kind: custom-gl-field-eqs
        params:
          gamma: {type: euclidean, dim: 2}
          sigma: {type: direction-ratio, field: {type: rotation}}
          samples:
            x: [[1.0, 0.0]]
            y: [[0.0, 1.0], [1.0, 0.0], [1.0, 0.0005]]
    """))
    assert len(sc.samples) == 1 and sc.skipped == 2


def test_field_equation_report_has_disclosure():
    report = execute(scenario("""
        kind: custom-gl-field-eqs
        params:
          gamma: {type: sphere}
          sigma: {type: zero}
          samples: {x: [[1.0, 0.5]], y: [[0.3, 0.4]]}
    """))
    assert report.disclosure == LEVI_CIVITA.description
    assert "connection: " + LEVI_CIVITA.description in report.render_text()
    assert report.passed


# runner -------------------------------------------------------------------------


def test_run_orbit_config(tmp_path):
    result = run(CONFIGS / "orbit_rotation.yaml", tmp_path)
    assert result.code == 0
    report = json.loads((tmp_path / "orbit-rotation.report.json").read_text())
    assert abs(report["values"]["L_T(orbit)"] - np.pi) < 1e-4
    assert report["values"]["half_volume"] == pytest.approx(np.pi)
    for verdict in report["verdicts"]:
        assert verdict["tolerance_key"] in report["scenario"]["tolerances"]
        assert verdict["tolerance"] == report["scenario"]["tolerances"][verdict["tolerance_key"]]


@pytest.mark.parametrize("name", ["pfaff.yaml", "pseudolinear.yaml", "field_equations.yaml"])
def test_example_configs_pass(tmp_path, name):
    result = run(CONFIGS / name, tmp_path)
    assert result.code == 0, [r.render_text() for r in result.reports]


def test_missing_field_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "name: x\nkind: orbit\nparams:\n  x0: [1.0, 0.0]\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "line 3" in err and "params.field" in err


def test_numeric_domain_error_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, "name: x\nkind: pseudolinear\nparams:\n  form: exp\n  v: [800.0, 0.0]\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "out")]) == 3
    assert "at (" in capsys.readouterr().err


def test_failing_verdict_exits_1(tmp_path):
    cfg = write(tmp_path, """
        name: x
        kind: pseudolinear
        params: {form: exp, v: [1.0, 2.0]}
        tolerances: {sff: 1.0e-300}
    """)
    result = run(cfg, tmp_path / "out")
    assert result.code == 1
    assert not json.loads((tmp_path / "out" / "summary.json").read_text())["passed"]
    assert "overall: FAIL" in (tmp_path / "out" / "x.report.txt").read_text()


def test_csv_tables_and_plots(tmp_path):
    assert main(["--config", str(CONFIGS / "pseudolinear.yaml"), "--out", str(tmp_path), "--emit-plots", "--grid", "5"]) == 0
    with open(tmp_path / "pseudolinear-exp.nodes.csv") as handle:
        rows = list(csv.reader(handle))
    assert rows[0][:2] == ["a0", "a1"] and len(rows) == 26
    assert rows[2][1] == format(0.25, ".17g")
    assert (tmp_path / "pseudolinear-exp.plot.levels.csv").exists()


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(CONFIGS / "pfaff.yaml", a)
    run(CONFIGS / "pfaff.yaml", b)
    for path in sorted(a.iterdir()):
        assert path.read_bytes() == (b / path.name).read_bytes()
