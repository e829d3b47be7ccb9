import json
import math

import numpy as np
import pytest

from sextic.errors import DomainError
from sextic.potential import stationary_points
from sextic.scan import (
    AvoidedCrossing,
    crossings_to_json,
    detect_avoided_crossings,
    golden_section_minimize,
    log_grid,
    read_scan_csv,
    scan_spectrum,
    splitting_samples,
    track_delta_x,
    write_scan_csv,
)
from sextic.variational import Parity, solve_levels

WINDOW = (-0.03, -0.003)


@pytest.fixture(scope="module")
def table():
    return scan_spectrum(log_grid(*WINDOW, 40), 10, 250)


@pytest.fixture(scope="module")
def crossings(table):
    return detect_avoided_crossings(table)


def test_near_harmonic_limit():
    t = scan_spectrum([-0.001], 2, 250)
    assert t.energies[0] == pytest.approx([1.0, 3.0], abs=1e-3)


def test_single_point_consistency():
    t = scan_spectrum([-0.02], 3, 250)
    ref = solve_levels(-0.02, 1, 250)[0]
    assert t.delta_x[0, 0] == pytest.approx(math.sqrt(ref.x2_expectation), rel=1e-14)
    assert t.delta_x[0, 0] == pytest.approx(math.sqrt(0.5 + 3 * 0.02), rel=0.05)


def test_table_invariants(table):
    assert np.all(np.diff(table.energies, axis=1) >= 0)
    assert np.all(table.delta_x > 0)
    assert np.all(np.diff(table.lambdas) > 0)
    assert table.metadata["dim"] == 250 and table.metadata["points"] == 40


def test_parity_constant_along_traces(table):
    assert np.all(table.parities == table.parities[0])


def test_triplet_clustering(table):
    E = table.energies[-1]
    for k in (0, 1):
        lo, hi = 4 * k + 2, 4 * k + 4
        spread = E[hi] - E[lo]
        assert spread < 1e-3 * (E[hi + 1] - E[hi])
        assert spread < 1e-3 * (E[lo] - E[lo - 1])


def test_deterministic():
    g = log_grid(*WINDOW, 12)
    a, b = scan_spectrum(g, 6, 120, workers=1), scan_spectrum(g, 6, 120, workers=4)
    assert np.array_equal(a.energies, b.energies) and np.array_equal(a.delta_x, b.delta_x)


def test_level_count_precondition():
    with pytest.raises(DomainError):
        scan_spectrum([-0.01], 0, 50)


def test_golden_section_on_closed_form_crossing():
    a, g = -0.0123456, 3.2e-4
    x, fx, ok, evals = golden_section_minimize(
        lambda l: math.hypot(l - a, g), -0.0130, -0.0120, tol=1e-9, max_evals=60
    )
    assert ok and abs(x - a) < 1e-8 and abs(fx - g) < 1e-8


def test_golden_section_reports_non_convergence():
    _, _, ok, evals = golden_section_minimize(lambda l: (l - 0.3) ** 2, 0.0, 1.0, tol=1e-12, max_evals=10)
    assert not ok and evals == 10


def test_crossing_invariants(crossings):
    assert crossings
    for c in crossings:
        assert isinstance(c, AvoidedCrossing)
        assert c.min_gap > 0
        assert c.pair[0] % 2 == c.pair[1] % 2
        assert WINDOW[0] < c.lambda_star < WINDOW[1]


@pytest.mark.parametrize("pair", [(3, 5), (4, 6)])
def test_sharp_crossing_exists(crossings, pair):
    hits = [c for c in crossings if c.pair == pair]
    assert hits
    assert min(c.min_gap / c.local_spacing for c in hits) < 1e-2


def test_ground_pair_isolated(crossings):
    assert not [c for c in crossings if {0, 1} & set(c.pair)]


def test_dim_doubling_stability(table, crossings):
    big = scan_spectrum(table.lambdas, 10, 500)
    assert np.max(np.abs(big.energies - table.energies)) < 1e-6
    assert [c.pair for c in detect_avoided_crossings(big, refine=False)] == [c.pair for c in crossings]


def test_grid_doubling_stability(crossings):
    fine = detect_avoided_crossings(scan_spectrum(log_grid(*WINDOW, 79), 10, 250))
    assert [c.pair for c in fine] == [c.pair for c in crossings]
    step = np.max(np.abs(np.diff(log_grid(*WINDOW, 40))))
    for a, b in zip(crossings, fine):
        assert abs(a.lambda_star - b.lambda_star) < step


def test_too_few_points():
    with pytest.raises(DomainError):
        detect_avoided_crossings(scan_spectrum(log_grid(*WINDOW, 5), 4, 60))


def test_unrefined_crossings_carry_flag(table):
    for c in detect_avoided_crossings(table, refine=False):
        assert not c.refined and c.bracket[0] < c.lambda_star < c.bracket[1]


@pytest.mark.parametrize("n", [0, 2])
def test_no_jumps_low_states(table, n):
    assert track_delta_x(table, n).jumps == ()


def test_single_upward_jump_n4(table):
    jumps = track_delta_x(table, 4).jumps
    assert len(jumps) == 1 and jumps[0].direction == "up"


def test_larger_jump_n6(table):
    j4 = track_delta_x(table, 4).jumps
    j6 = track_delta_x(table, 6).jumps
    assert len(j6) == 1
    # side -> central as |lam| decreases, i.e. Delta-x drops along increasing lam
    assert j6[0].direction == "down"
    assert j4 and abs(j6[0].change) > abs(j4[0].change)


def test_jump_rule_on_synthetic_trace(table):
    t = scan_spectrum(log_grid(*WINDOW, 12), 2, 60)
    t.delta_x[:, 0] = np.linspace(1, 2, 12)
    t.delta_x[7:, 0] += 1.0
    trace = track_delta_x(t, 0, threshold=3.0)
    assert [j.index for j in trace.jumps] == [6]
    assert trace.jumps[0].direction == "up"
    with pytest.raises(DomainError):
        track_delta_x(t, 5)


def test_localization_consistency(table):
    for i, lam in enumerate(table.lambdas):
        if lam <= -1 / 36:
            # single well: no barrier, no localisation label
            assert all(track_delta_x(table, n).localization[i] is None for n in (0, 4))
            continue
        xM = math.sqrt(stationary_points(lam).x_M_sq)
        trace_loc = [track_delta_x(table, n).localization[i] for n in range(table.n_levels)]
        side = [table.delta_x[i, n] for n in range(table.n_levels) if trace_loc[n] == "side"]
        central = [table.delta_x[i, n] for n in range(table.n_levels) if trace_loc[n] == "central"]
        assert all(d > xM for d in side) and all(d <= xM for d in central)
        if side and central:
            assert min(side) > max(central)


def test_splitting_samples():
    s = splitting_samples([-0.03, -0.02], 500)
    d = dict(s)
    assert d[-0.02] == pytest.approx(1.72e-3, rel=0.10)
    assert d[-0.03] == pytest.approx(0.891 * math.exp(-1 / 0.24), rel=0.10)
    assert s.dropped == ()


def test_splitting_flat_trend():
    lams = [-0.008, -0.007, -0.006, -0.005, -0.0045]
    s = splitting_samples(lams, 500)
    q = [math.log(d) + 1 / (8 * abs(l)) for l, d in s]
    dev = [abs(x - math.log(0.891)) for x in q]
    assert max(dev) < 0.02
    assert all(a > b for a, b in zip(dev, dev[1:]))


def test_noise_floor_filter():
    s = splitting_samples([-0.0015, -0.02], 200)
    assert [l for l, _ in s.dropped] == [-0.0015]
    assert list(s.lambdas) == [-0.02]


def test_csv_round_trip(table):
    text = write_scan_csv(table)
    assert text.splitlines()[1] == "lambda,level,parity,energy,delta_x"
    back = read_scan_csv(text)
    assert np.array_equal(back.lambdas, table.lambdas)
    assert np.array_equal(back.energies, table.energies)
    assert np.array_equal(back.delta_x, table.delta_x)
    assert np.array_equal(back.parities, table.parities)
    assert back.metadata == table.metadata
    assert [c.pair for c in detect_avoided_crossings(back, refine=False)] == [
        c.pair for c in detect_avoided_crossings(table, refine=False)
    ]


def test_crossings_json(crossings):
    d = json.loads(crossings_to_json(crossings, {"dim": 250}))
    assert d["metadata"] == {"dim": 250}
    assert {"pair", "lambda_star", "min_gap"} <= set(d["crossings"][0])
