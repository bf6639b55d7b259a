import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from particle_approx.discretize import build_density_approx, make_grid
from particle_approx.fields import BoxDomain
from particle_approx.harness import DEFAULT_N_VALUES, StudyCase, run_study
from particle_approx.io import (
    CSV_HEADER,
    ConfigError,
    FormatError,
    dump_study_config,
    load_study_config,
    parse_study_config,
    read_field_file,
    read_grid_values,
    read_pc_file,
    write_field_file,
    write_grid_values,
    write_pc_file,
    write_study_csv,
)
from particle_approx.library import constant, cos2_bump, linear

BOX = BoxDomain(-1.0, 1.0, 0.0, 2.0)


class TestGridFieldFile:
    def test_constant_round_trip(self, tmp_path):
        path = tmp_path / "c.txt"
        write_field_file(path, constant(0.3, BOX), BOX, 3)
        box, values = read_grid_values(path)
        assert box == BOX
        assert np.all(values == 0.3)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6))
    @settings(max_examples=30, deadline=None)
    def test_values_bit_exact(self, tmp_path_factory, vals):
        path = tmp_path_factory.mktemp("g") / "v.txt"
        arr = np.reshape(vals, (2, 3))
        write_grid_values(path, BOX, arr)
        np.testing.assert_array_equal(read_grid_values(path)[1], arr)

    def test_nodes_reproduce_samples(self, tmp_path):
        path = tmp_path / "b.txt"
        f = cos2_bump(half_width=1.0)
        write_field_file(path, f, BOX, 5, 9)
        g = read_field_file(path)
        xs, ys = np.linspace(-1, 1, 5), np.linspace(0, 2, 9)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        np.testing.assert_array_equal(g(X, Y), f(X, Y))
        assert g(2.0, 1.0) == 0.0 and g.support_hint == BOX

    def test_bilinear_between_nodes(self, tmp_path):
        path = tmp_path / "l.txt"
        write_field_file(path, linear(1.0, 2.0, -1.0, BOX), BOX, 3)
        assert read_field_file(path)(0.3, 0.7) == pytest.approx(1.0 + 0.6 - 0.7, abs=1e-14)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# particle_approx grid-field v1\nbox 0 1 0 1\nshape 3 3\n1 1 1\n1 1 1\n1 1\n")
        with pytest.raises(FormatError, match="expected 3x3 = 9 values, found 8"):
            read_grid_values(path)

    @pytest.mark.parametrize(
        "text,line",
        [
            ("grid\n", 1),
            ("# particle_approx grid-field v1\nbox 0 1 0\n", 2),
            ("# particle_approx grid-field v1\nbox 0 1 1 0\nshape 2 2\n", 2),
            ("# particle_approx grid-field v1\nbox 0 1 0 1\nshape 2 x\n", 3),
            ("# particle_approx grid-field v1\nbox 0 1 0 1\nshape 2 2\n1 nan\n1 1\n", 4),
            ("# particle_approx grid-field v1\nbox 0 1 0 1\nshape 2 2\n1 1\n1 one\n", 5),
        ],
    )
    def test_errors_carry_line(self, tmp_path, text, line):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(FormatError) as info:
            read_grid_values(path)
        assert info.value.line == line


class TestPcFile:
    def test_round_trip(self, tmp_path):
        pc = build_density_approx(cos2_bump(), make_grid(BoxDomain.square(1.0), 4))
        write_pc_file(tmp_path / "pc.txt", pc)
        back = read_pc_file(tmp_path / "pc.txt")
        np.testing.assert_array_equal(back.values, pc.values)
        assert back.kind == "density" and back.grid.box == pc.grid.box

    def test_wrong_header(self, tmp_path):
        (tmp_path / "x.txt").write_text("hello\n")
        with pytest.raises(FormatError):
            read_pc_file(tmp_path / "x.txt")


MINIMAL = """
cases:
  - name: bump
    theorem: th1
    rho: {builtin: cos2_bump}
    phi: {builtin: cos2_bump}
"""

FULL = """
output: out.csv
quadrature: {points: 6}
cases:
  - name: bump
    theorem: th1
    rho: {builtin: cos2_bump, half_width: 1.0}
    phi: {builtin: cos2_bump}
    omega: {builtin: cos2_periodic}
    n: [4, 8]
    box: [-2, 2, -1, 1]
    norms: {rho: {dx_sup: 2.0}}
    constant_overrides: {C12: 3.0}
  - name: gauss
    theorem: th4
    rho: {builtin: gaussian, center: [0.5, 0]}
    phi: {builtin: cos_product, kx: 2}
    eps: 1.0e-3
    resolution: 0.01
    quadrature: {rel_tol: 1.0e-6}
"""


class TestStudyConfig:
    def test_minimal_defaults(self):
        (case,) = parse_study_config(MINIMAL)
        assert isinstance(case, StudyCase)
        assert case.n_values == DEFAULT_N_VALUES
        assert case.quad.rel_tol == 1e-12 and case.resolution == 1e-3
        assert case.omega is None and case.box is None

    def test_full(self):
        bump, gauss = parse_study_config(FULL)
        assert bump.quad.points == 6 and gauss.quad.points == 6 and gauss.quad.rel_tol == 1e-6
        assert bump.box == BoxDomain(-2.0, 2.0, -1.0, 1.0)
        assert bump.rho.norm_data.dx_sup == 2.0 and bump.rho.norm_data.dy_sup == pytest.approx(np.pi / 2)
        assert bump.constant_overrides == {"C12": 3.0}
        assert gauss.eps == 1e-3 and gauss.rho(0.5, 0.0) == 1.0

    @pytest.mark.parametrize("text", [MINIMAL, FULL])
    def test_round_trip(self, text):
        cfg = load_study_config(text)
        again = load_study_config(dump_study_config(cfg))
        assert again == cfg
        assert dump_study_config(again) == dump_study_config(cfg)

    @pytest.mark.parametrize(
        "patch,message",
        [
            ({"rho": {"builtin": "gaussian"}}, "th1 requires compact support"),
            ({"n": "4,8,8"}, "strictly ascending"),
            ({"n": []}, "N list is empty"),
            ({"theorem": "th9"}, "unknown theorem"),
            ({"rho": {"builtin": "nope"}}, "unknown field"),
            ({"rho": {"builtin": "gaussian", "sigma": 1}}, "bad parameters"),
            ({"eps": 0.1}, "takes no eps"),
            ({"colour": 1}, "unknown keys"),
            ({"quadrature": {"points": 0}}, "points"),
            ({"norms": {"rho": {"dxx": 1}}}, "unknown keys"),
            ({"constant_overrides": {"K_eps": 1}}, "unknown keys"),
            ({"box": [-0.5, 0.5, -0.5, 0.5]}, "does not contain"),
            ({"rho": {"file": "missing.txt"}}, "not found"),
        ],
    )
    def test_errors(self, patch, message):
        import yaml

        doc = yaml.safe_load(MINIMAL)
        doc["cases"][0].update(patch)
        with pytest.raises(ConfigError, match=message):
            load_study_config(yaml.safe_dump(doc))

    def test_truncated_needs_eps(self):
        text = MINIMAL.replace("th1", "th2")
        with pytest.raises(ConfigError, match="requires eps"):
            load_study_config(text)

    def test_file_field_relative_to_base(self, tmp_path):
        write_field_file(tmp_path / "rho.txt", cos2_bump(), BoxDomain.square(1.0), 17)
        text = MINIMAL.replace("rho: {builtin: cos2_bump}", "rho: {file: rho.txt}")
        (case,) = parse_study_config(text, base_dir=tmp_path)
        assert case.rho.support_hint == BoxDomain.square(1.0)

    def test_invalid_yaml(self):
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_study_config("cases: [")

    def test_duplicate_names(self):
        text = MINIMAL + MINIMAL.split("cases:")[1]
        with pytest.raises(ConfigError, match="unique"):
            load_study_config(text)


def test_csv_layout():
    b = cos2_bump()
    res = run_study(StudyCase("bump", "th1", b, b, omega=b, n_values=(4, 8)))
    buf = io.StringIO()
    write_study_csv(buf, [res])
    lines = buf.getvalue().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    row = lines[1].split(",")
    assert row[:5] == ["bump", "th1", "4", "", ""]
    assert float(row[5]) == res.records[0].measured_error
    assert lines[3].startswith("bump,th1,constants,")
    assert "C12=" in lines[3] and "K12=" in lines[3]
