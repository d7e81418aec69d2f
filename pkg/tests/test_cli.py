import contextlib
import io
import json
import math
import sys

import numpy as np
import pytest

from conftest import GOLDEN, SCENARIOS
from photokin.cli import emit_output, parse_scenario, run_scan
from photokin.cli.main import main
from photokin.cli.runner import build_context
from photokin.cli.checks import run_checks
from photokin.cli.scenario import MissingRequirement, RangeError, ScenarioSyntaxError, UnknownKey
from photokin.core import DEFAULT_CONSTANTS as C
from photokin.errors import IoError
from photokin.table import SpectrumTable, format_float

ALL_SCENARIOS = sorted(p.stem for p in SCENARIOS.glob("*.scn"))

MINIMAL = """material.kind = KronigPenney
material.a_nm = 1.0
material.strength = -3.0
process.kind = emission.cc
process.initial = band3
process.final = band2
process.k_e = 1.0
photon.energy_min_ev = 0.5
photon.energy_max_ev = 2.5
photon.points = 5
"""


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def test_minimal_round_trip():
    s = parse_scenario(MINIMAL)
    text = s.to_text()
    again = parse_scenario(text)
    assert again == s
    assert again.to_text() == text


def test_misspelled_key_reports_line():
    with pytest.raises(UnknownKey) as info:
        parse_scenario(MINIMAL.replace("material.strength", "material.stregth_param"))
    assert info.value.issues[0].line == 3


def test_missing_discrete_state():
    text = MINIMAL.replace("emission.cc", "emission.dc")
    with pytest.raises(MissingRequirement):
        parse_scenario(text)


def test_syntax_and_range_errors():
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario(MINIMAL + "photon.points 5\n")
    assert info.value.issues[0].line == 11
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario(MINIMAL + "photon.points = 7\n")
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario(b"material.kind = KronigPenney\nmaterial.a_nm = \xff\n")
    assert (info.value.issues[0].line, info.value.issues[0].column) == (2, 17)
    with pytest.raises(RangeError):
        parse_scenario(MINIMAL.replace("a_nm = 1.0", "a_nm = -1.0"))
    with pytest.raises(UnknownKey):
        parse_scenario(MINIMAL + "state.kind = Oscillator\n")


def test_all_issues_are_collected():
    bad = MINIMAL.replace("a_nm = 1.0", "a_nm = -1.0") + "photon.colour = red\n"
    with pytest.raises(RangeError) as info:
        parse_scenario(bad)
    kinds = {i.kind for i in info.value.issues}
    assert {"RangeError", "UnknownKey"} <= kinds


@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_golden_output(name, tmp_path):
    out = tmp_path / "out.csv"
    code, _, err = run_cli("run", SCENARIOS / f"{name}.scn", "--out", out, "--format", "csv")
    assert code == 0, err
    assert out.read_bytes() == (GOLDEN / f"{name}.csv").read_bytes()


@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_shipped_scenarios_pass_checks(name):
    code, out, _ = run_cli("check", SCENARIOS / f"{name}.scn")
    assert code == 0, out
    assert "FAIL" not in out


def test_determinism_and_parallel_runs():
    s = parse_scenario((SCENARIOS / "scattering_cc.scn").read_text())
    first = run_scan(s, C, SCENARIOS).to_csv()
    second = run_scan(s, C, SCENARIOS).to_csv()
    parallel = run_scan(parse_scenario(s.to_text() + "numerics.jobs = 4\n"), C, SCENARIOS).to_csv()
    assert first == second
    body = lambda t: [line for line in t.splitlines() if not line.startswith("#")]  # noqa: E731
    assert body(parallel) == body(first)


def test_csv_json_equivalence(tmp_path):
    table = run_scan(parse_scenario((SCENARIOS / "absorption_cc.scn").read_text()), C, SCENARIOS)
    csv_path, json_path = tmp_path / "t.csv", tmp_path / "t.json"
    emit_output(table, "csv", csv_path)
    emit_output(table, "json", json_path)
    a = SpectrumTable.from_csv(csv_path.read_text())
    b = SpectrumTable.from_json(json_path.read_text())
    assert a.metadata == b.metadata
    for name in table.columns:
        np.testing.assert_array_equal(a.column(name), b.column(name))
        np.testing.assert_array_equal(a.column(name), table.column(name))


def test_empty_table_and_formatting(tmp_path):
    empty = SpectrumTable({"photon_energy_eV": [], "sigma_nm2": []})
    assert empty.to_csv() == "photon_energy_eV,sigma_nm2\n"
    assert format_float(0.1) == "0.1"
    assert format_float(1e-300) == "1e-300"
    assert float(format_float(math.pi)) == math.pi
    with pytest.raises(IoError):
        emit_output(empty, "csv", tmp_path / "missing_dir" / "x.csv")
    with pytest.raises(ValueError):
        emit_output(empty, "xml", None)


def test_gap_scan_gives_zero_rows():
    text = (SCENARIOS / "absorption_cc.scn").read_text()
    s = parse_scenario(text.replace("photon.energy_min_ev", "# was min").replace("photon.energy_max_ev", "# was max")
                       + "photon.energy_min_ev = 0.05\nphoton.energy_max_ev = 0.3\n")
    table = run_scan(s, C, SCENARIOS)
    assert np.all(table.column("sigma_nm2") == 0.0)


def test_lorentz_scan_peaks_at_resonance():
    s = parse_scenario((SCENARIOS / "absorption_dd.scn").read_text())
    table = run_scan(s, C, SCENARIOS)
    ctx = build_context(s, C, SCENARIOS)
    i, f = ctx.ref("state1"), ctx.ref("state2")
    energies = table.column("photon_energy_eV")
    peak = energies[int(np.argmax(table.column("sigma_nm2")))]
    nearest = energies[int(np.argmin(np.abs(energies - (f.energy - i.energy))))]
    assert peak == nearest


def test_exit_codes(tmp_path):
    bad_syntax = tmp_path / "bad.scn"
    bad_syntax.write_text("material.kind KronigPenney\n")
    assert run_cli("run", bad_syntax)[0] == 2
    assert run_cli("run", tmp_path / "nope.scn")[0] == 4
    physics = tmp_path / "physics.scn"
    physics.write_text(MINIMAL.replace("band3", "band1").replace("process.final = band2", "process.final = band3"))
    code, _, err = run_cli("run", physics)
    assert code == 3 and "NonDecayingPair" in err
    code, out, _ = run_cli("run", SCENARIOS / "emission_cc.scn", "--format", "json")
    assert code == 0 and json.loads(out)["metadata"]["process"] == "emission.cc"
    assert run_cli("run", SCENARIOS / "emission_cc.scn", "--out", tmp_path / "no" / "x.csv")[0] == 4


def test_constants_override(tmp_path):
    code, out, _ = run_cli("run", SCENARIOS / "recoil_shift.scn", "--constants", SCENARIOS / "constants.txt")
    assert code == 0
    assert out == (GOLDEN / "recoil_shift.csv").read_text()
    bad = tmp_path / "c.txt"
    bad.write_text("planck = 1\n")
    assert run_cli("run", SCENARIOS / "recoil_shift.scn", "--constants", bad)[0] == 2


@pytest.mark.parametrize("kind", ["bands", "dos", "bloch", "jdos"])
def test_band_exports(kind):
    code, out, _ = run_cli("bands", SCENARIOS / "absorption_cc.scn", "--kind", kind)
    assert code == 0
    table = SpectrumTable.from_csv(out)
    assert table.n_rows > 0 and all(np.all(np.isfinite(v) | np.isinf(v)) for v in table.columns.values())


def test_band_export_needs_material():
    code, _, err = run_cli("bands", SCENARIOS / "emission_dd.scn")
    assert code == 2 and "MissingRequirement" in err


SPEC_OPERATIONS = {
    "polarization_basis", "polarization_sum", "angle_average_dipole", "lineshape_eval", "spin_average",
    "solve_bound_states", "dipole_matrix_element", "momentum_matrix_element", "oscillator_strength", "trk_sum",
    "solve_dispersion", "group_velocity", "constant_energy_set", "dos_band", "joint_dos", "cell_dipole",
    "discrete_to_band_dipole", "local_dos", "emission_dd_differential", "einstein_A", "emission_dc_spectrum",
    "hole_capture_cross_section", "electron_capture_cross_section", "emission_cc", "abs_dd", "abs_dc_band",
    "abs_cd_band", "abs_cc_interband", "scatter_full_second_order", "kh_dd", "kh_dc", "kh_cd", "kh_cc",
    "recoil_shift", "eh_recombination_cross_section", "eh_rate_per_volume", "parse_scenario", "run_scan",
    "emit_output",
}


def test_shipped_scenarios_exercise_every_operation(tmp_path):
    called = set()

    def profiler(frame, event, arg):
        if event == "call" and frame.f_globals.get("__name__", "").startswith("photokin"):
            called.add(frame.f_code.co_name)

    sys.setprofile(profiler)
    try:
        for name in ALL_SCENARIOS:
            path = SCENARIOS / f"{name}.scn"
            run_cli("run", path, "--out", tmp_path / f"{name}.out")
            run_cli("check", path)
    finally:
        sys.setprofile(None)
    assert SPEC_OPERATIONS - called == set()
