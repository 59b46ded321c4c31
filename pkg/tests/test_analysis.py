import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singularpde import (
    Density,
    EstimateReport,
    LerayLionsSpec,
    ProblemSpec,
    RadonMeasure,
    ScalarField,
    boundary_layer,
    build_grid,
    comparison_report,
    compact_subset,
    hopf_lax_check,
    hopf_lax_transform,
    mollify,
    predicted_exponent,
    regularity_classify,
    sobolev_seminorm,
    solve_approximating,
    solve_measure_only,
    solve_pure_singular,
    truncation_energy_scan,
    truncation_residual_mass,
    truncation_residual_scan,
)
from singularpde.analysis import (
    fit_loglog_slope,
    grows,
    min_growth,
    near_origin_slope,
    plot_report,
    relative_range,
    reports_to_csv,
    stable,
    truncation_energy,
)

# (1/eps) int_{1-eps<r<1} (1-r) dx over the unit ball of R^3, by quadrature (tests/oracles)
DISTANCE_LAYER = {0.2: 0.946666586281724, 0.1: 0.5476843192758207, 0.05: 0.29360801341674664}
ORIGIN = RadonMeasure.dirac((0.0,), 1.0)


@pytest.fixture(scope="module")
def ball200():
    return build_grid("unit-ball-radial(3)", 200)


@pytest.fixture(scope="module")
def green200(ball200):
    return solve_measure_only(ball200, None, ORIGIN)


# ---------------------------------------------------------------- helpers


def test_slope_of_exact_power():
    x = np.geomspace(1, 100, 8)
    assert fit_loglog_slope(x, 3 * x**1.7) == pytest.approx(1.7)
    assert math.isnan(fit_loglog_slope(x[:3], x[:3]))
    assert math.isnan(fit_loglog_slope(x, np.zeros(8)))


def test_stability_and_growth_rules():
    assert stable([1.0, 1.1, 1.05]) and not stable([1.0, 1.5])
    assert relative_range([0.0, 0.0]) == 0.0
    assert grows([1.0, 1.2, 1.5]) and not grows([1.0, 1.1])
    assert min_growth([1.0, 2.0, 3.0]) == pytest.approx(1.5)
    assert math.isnan(min_growth([1.0]))


# ---------------------------------------------------------------- gradient quantities


def test_seminorm_of_linear_function(square16):
    u = ScalarField(square16, square16.coords[:, 0])
    assert sobolev_seminorm(u, 2) == pytest.approx(1.0)
    assert sobolev_seminorm(u, 3, modular=True) == pytest.approx(1.0)


def test_seminorm_input_checks(square16):
    u = ScalarField(square16, square16.coords[:, 0])
    with pytest.raises(ValueError):
        sobolev_seminorm(u, 0.5)
    with pytest.raises(ValueError):
        sobolev_seminorm(u, 2, region=np.zeros(square16.n_nodes, dtype=bool))


def test_green_truncation_energy_equals_level_times_mass(green200):
    # int |grad T_k G|^2 = k for a unit point mass
    for k in (0.5, 1.0, 2.0):
        assert truncation_energy(green200, k) == pytest.approx(k, rel=0.04)


def test_green_gradient_thresholds():
    below, above = [], []
    for R in (100, 200, 400):
        g = build_grid("unit-ball-radial(3)", R)
        w = solve_measure_only(g, None, ORIGIN)
        below.append(sobolev_seminorm(w, 1.4))
        above.append(sobolev_seminorm(w, 1.6, modular=True))
    assert stable(below)
    assert grows(above)


def test_local_seminorm_stable_for_large_gamma():
    vals = []
    for R in (100, 200):
        g = build_grid("unit-ball-radial(3)", R)
        u = solve_approximating(ProblemSpec(g, 1.0, ORIGIN, 2.0, n=256))
        vals.append(sobolev_seminorm(u, 1.4, region=compact_subset(g, 0.25)))
    assert stable(vals)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.05, 0.4), b=st.floats(0.05, 0.4))
def test_seminorm_monotone_in_region(a, b):
    g = build_grid("unit-disk", 24)
    u = ScalarField(g, np.sin(3 * g.coords[:, 0]) * g.dist)
    small, big = compact_subset(g, max(a, b)), compact_subset(g, min(a, b))
    assert sobolev_seminorm(u, 2, region=small) <= sobolev_seminorm(u, 2, region=big) + 1e-12


# ---------------------------------------------------------------- truncation energies


def test_truncation_scan_on_constant_is_degenerate(square16):
    u = ScalarField(square16, np.full(square16.n_nodes, 0.5))
    rep = truncation_energy_scan(u, 0.5, [1, 2])
    assert rep.verdict == "DEGENERATE"


def test_truncation_scan_range_checks(disk64):
    u = ScalarField(disk64, disk64.dist, "solution")
    with pytest.raises(ValueError):
        truncation_energy_scan(u, 0.5, [])
    with pytest.raises(ValueError):
        truncation_energy_scan(u, 0.5, [0.1, 5.0])


def test_truncation_scan_disk(disk64):
    u = solve_approximating(ProblemSpec(disk64, 1.0, RadonMeasure.dirac(), 0.5, n=256))
    top = u.values.max()
    rep = truncation_energy_scan(u, 0.5, top * np.geomspace(1 / 64, 1, 9))
    assert rep.passed and rep.bound == pytest.approx(1.15)


def test_truncation_scan_records_power_energies(ball200):
    u = solve_approximating(ProblemSpec(ball200, 1.0, ORIGIN, 2.0, n=256))
    rep = truncation_energy_scan(u, 2.0, np.geomspace(1.0, u.values.max(), 6))
    assert rep.passed and rep.bound == pytest.approx(2.15)
    assert len(rep.extra["power_energies"]) == 6


# ---------------------------------------------------------------- boundary layer


def test_boundary_layer_of_distance_function():
    g = build_grid("unit-ball-radial(3)", 400)
    rep = boundary_layer(ScalarField(g, g.dist, "solution"), list(DISTANCE_LAYER))
    for eps, val in zip(rep.points, rep.values):
        assert val == pytest.approx(DISTANCE_LAYER[eps], rel=0.06)
    assert rep.passed


def test_boundary_layer_fails_for_nonvanishing_trace(ball200):
    u = ScalarField(ball200, np.ones(ball200.n_nodes), "datum")
    assert boundary_layer(u, [0.2, 0.1, 0.05]).verdict == "FAIL"


def test_boundary_layer_width_checks(ball100):
    u = ScalarField(ball100, ball100.dist, "solution")
    with pytest.raises(ValueError):
        boundary_layer(u, [0.1, 0.01])
    with pytest.raises(ValueError):
        boundary_layer(u, [0.1])


# ---------------------------------------------------------------- regularity


def test_predicted_exponents():
    assert predicted_exponent(1, 2, 1, 3) == ("ii", 6.0)
    item, q = predicted_exponent(2, 1.2, 2, 3)
    assert item == "iii" and q == pytest.approx(6.0)
    assert predicted_exponent(2, 2, 1, 3) == ("i", math.inf)
    item, q = predicted_exponent(1.2, 1.2, 1, 3)
    assert item == "iv" and q == pytest.approx(6.0)
    assert predicted_exponent(2, 1, 1, 3)[1] == pytest.approx(3.0)


@pytest.mark.parametrize("args", [(1, 2, 1, 2), (1.5, 2, 1, 3), (0.5, 2, 1, 3), (1, 2, 0, 3)])
def test_predicted_exponent_rejects(args):
    with pytest.raises(ValueError):
        predicted_exponent(*args)


def test_bounded_case_has_stable_sup_norm():
    v = regularity_classify(1.0, 1.5, mu_power=1.5, resolutions=(50, 100))
    assert v.item == "i" and not v.saturating
    assert v.passed and v.report().passed


def test_regularity_input_checks():
    with pytest.raises(ValueError):
        regularity_classify(1.0, 1.5, mu_power=1.5, N=2)
    with pytest.raises(ValueError):
        regularity_classify(1.0, 1.5)


def test_near_origin_slope_of_power(ball200):
    r = ball200.coords
    u = ScalarField(ball200, np.maximum(r, ball200.h) ** -0.7)
    assert near_origin_slope(u, 0.05, 0.25) == pytest.approx(-0.7, rel=1e-6)


# ---------------------------------------------------------------- transformed equation


def test_transform_values():
    assert hopf_lax_transform(4.0, 1.0) == 16.0
    np.testing.assert_allclose(hopf_lax_transform(np.array([1.0, 8.0]), 0.5), [1.0, 8**1.5])
    with pytest.raises(ValueError):
        hopf_lax_transform(np.array([1.0]), 0.0)


def manufactured(gamma, R=32):
    g = build_grid("unit-square", R)
    x, y = g.coords.T
    exact = np.where(g.interior, np.sin(np.pi * x) * np.sin(np.pi * y), 0.0)
    f = 2 * np.pi**2 * exact ** (1 + gamma)
    return g, f, solve_approximating(ProblemSpec(g, f, RadonMeasure.zero(), gamma, n=1e6))


def test_transformed_residual_small_gamma_limit():
    _, f, u = manufactured(1e-6)
    rep = hopf_lax_check(u, 1e-6, f, shift=1e-6)
    assert rep.statistic == pytest.approx(1.0, abs=1e-5)


def test_transformed_residual_manufactured():
    _, f, u = manufactured(0.5)
    assert hopf_lax_check(u, 0.5, f, shift=1e-6).passed


def test_transformed_residual_pure_measure(disk64):
    mu_n = mollify(RadonMeasure.dirac(), 64, disk64)
    w = solve_measure_only(disk64, None, RadonMeasure.dirac(), n=64)
    assert hopf_lax_check(w, 0.5, 0.0, mu_n=mu_n, delta=0.1).passed


def test_transformed_residual_needs_positive_field(square16):
    with pytest.raises(ValueError):
        hopf_lax_check(ScalarField(square16, square16.zeros()), 0.5, 1.0)


# ---------------------------------------------------------------- truncation residual


@pytest.fixture(scope="module")
def atom_problem(ball200):
    spec = ProblemSpec(ball200, 1.0, ORIGIN, 2.0, n=256)
    return spec, solve_approximating(spec)


def test_residual_vanishes_above_sup(atom_problem):
    spec, u = atom_problem
    assert truncation_residual_mass(u, spec, 1.01 * u.values.max()) < 1e-9
    with pytest.raises(ValueError):
        truncation_residual_mass(u, spec, 0.0)


def test_residual_scan_flags_levels_above_sup(atom_problem):
    spec, u = atom_problem
    rep = truncation_residual_scan(u, spec, [1, 2, 4, 2 * u.values.max()])
    assert rep.verdict == "DEGENERATE"


def test_residual_in_excess_of_atom_decays(atom_problem):
    # the mollified atom keeps its mass inside {u > k}; what remains decays fast
    spec, u = atom_problem
    grid = spec.grid
    mu_n = mollify(spec.mu, spec.n, grid).values
    ks = (1.0, 2.0, 4.0, 8.0)
    excess = [truncation_residual_mass(u, spec, k) - grid.integrate(mu_n * (u.values > k)) for k in ks]
    assert fit_loglog_slope(ks, excess) <= -spec.gamma + 0.2


def test_residual_of_diffuse_datum_decays(ball200):
    spec = ProblemSpec(ball200, Density("power", 100.0, -2.5), RadonMeasure.zero(), 0.5, n=256)
    u = solve_approximating(spec)
    top = u.values.max()
    rep = truncation_residual_scan(u, spec, np.geomspace(top / 64, top / 2, 7))
    assert rep.passed
    assert np.all(np.diff(rep.values) < 0)


def test_residual_p_two_matches_linear(ball100):
    a = ProblemSpec(ball100, 1.0, ORIGIN, 1.0, n=64)
    b = ProblemSpec(ball100, 1.0, ORIGIN, 1.0, n=64, leray_lions=LerayLionsSpec(2.0))
    u = solve_approximating(a)
    assert truncation_residual_mass(u, a, 1.0) == pytest.approx(truncation_residual_mass(u, b, 1.0), rel=1e-9)


# ---------------------------------------------------------------- comparison


def test_comparison_without_measure(disk64):
    spec = ProblemSpec(disk64, 1.0, RadonMeasure.zero(), 0.5, n=64)
    u = solve_approximating(spec)
    v = solve_pure_singular(spec)
    w = ScalarField(disk64, disk64.zeros(), "solution", {"n": 64})
    rep = comparison_report(u, v, w)
    assert rep.passed and abs(rep.values[0]) < 1e-12


def test_comparison_on_disk(disk64):
    spec = ProblemSpec(disk64, 1.0, RadonMeasure.dirac(), 0.5, n=256)
    u, v = solve_approximating(spec), solve_pure_singular(spec)
    w = solve_measure_only(disk64, None, spec.mu, n=256)
    assert comparison_report(u, v, w).passed


def test_comparison_flags_mismatched_indices(disk64):
    spec = ProblemSpec(disk64, 1.0, RadonMeasure.dirac(), 0.5, n=256)
    u = solve_approximating(spec)
    v = solve_pure_singular(spec.with_n(4))
    w = solve_measure_only(disk64, None, spec.mu, n=256)
    rep = comparison_report(u, v, w)
    assert rep.verdict == "DEGENERATE" and "non-comparable" in rep.note


def test_comparison_rejects_other_grids(disk64, square16):
    a = ScalarField(disk64, disk64.zeros())
    b = ScalarField(square16, square16.zeros())
    with pytest.raises(ValueError):
        comparison_report(a, b, a)


# ---------------------------------------------------------------- reports and output


def make_report(statistic, bound, rule):
    return EstimateReport("demo", "k", (1.0, 2.0), (0.5, 0.25), statistic, bound, rule)


def test_verdicts():
    assert make_report(1.0, 2.0, "<=").verdict == "PASS"
    assert make_report(3.0, 2.0, "<=").verdict == "FAIL"
    assert make_report(0.1, 0.2, "stable").passed
    assert make_report(1.1, 1.15, "grows").verdict == "FAIL"
    assert make_report(float("nan"), 1.0, ">=").verdict == "DEGENERATE"


def test_csv_layout():
    text = reports_to_csv([make_report(1.0, 2.0, "<=")])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["estimate_id", "parameter", "value", "bound", "verdict"]
    assert rows[1] == ["demo", "k=1", "0.5", "", ""]
    assert rows[-1] == ["demo", "<=", "1", "2", "PASS"]
    assert "\r" not in text


rules = st.sampled_from(["<=", ">=", "stable", "grows"])
numbers = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=100)
@given(statistic=numbers, bound=numbers, rule=rules)
def test_verdict_reproducible_from_csv(statistic, bound, rule):
    rep = make_report(statistic, bound, rule)
    last = list(csv.reader(io.StringIO(reports_to_csv([rep]))))[-1]
    again = make_report(float(last[2]), float(last[3]), last[1])
    assert again.verdict == last[4] == rep.verdict


@settings(max_examples=30)
@given(statistic=numbers, bound=numbers, rule=rules)
def test_csv_is_deterministic(statistic, bound, rule):
    reps = [make_report(statistic, bound, rule), make_report(bound, statistic, rule)]
    assert reports_to_csv(reps) == reports_to_csv(reps)


def test_csv_written_to_path(tmp_path):
    path = tmp_path / "r.csv"
    text = reports_to_csv([make_report(1.0, 2.0, "<=")], path)
    assert path.read_bytes() == text.encode()


def test_plot_is_deterministic(tmp_path):
    rep = make_report(1.0, 2.0, "<=")
    plot_report(rep, tmp_path / "a.svg")
    plot_report(rep, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert b"<svg" in (tmp_path / "a.svg").read_bytes()
