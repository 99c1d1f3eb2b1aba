"""High-SNR tradeoff curves: frozen oracle values and structural properties.

The frozen numbers were produced by independent brute-force searches over
eigenmode exponents (four-dimensional grids plus candidate-point algebra),
not by the implementation under test.
"""

import math

import numpy as np
import pytest

from mharq.asymptotic import (
    DmdtCurve,
    fbl_dmdt_3node,
    fixed_dmdt_3node,
    fixed_optimal_windows,
    nnode_fbl_bounds,
    nnode_fixed_bounds,
    nnode_vbl_dmdt,
    sweep_curve,
    vbl_closed_form,
    vbl_dmdt_3node,
)
from mharq.tradeoff import (
    AntennaPair,
    ChannelAssumption,
    FblArq,
    FixedArq,
    Topology,
    VblArq,
    WindowAllocation,
    dmt,
)

LT = ChannelAssumption.LONG_TERM_STATIC
ST = ChannelAssumption.SHORT_TERM_STATIC

T413 = Topology([4, 1, 3])
T222 = Topology([2, 2, 2])
T141 = Topology([1, 4, 1])


# ---------------------------------------------------------------------------
# dynamic sharing (VBL)


@pytest.mark.parametrize(
    "topology, L, r, expected",
    [
        (T413, 4, 1.0, 2.0),
        (T413, 10, 1.0, 8.0 / 3.0),
        (T413, 7, 1.0, 2.5),
        (T413, 4, 0.5, 18.0 / 7.0),
        (T222, 4, 1.0, 22.0 / 7.0),
        (T222, 4, 2.5, 14.0 / 11.0),
    ],
)
def test_vbl_long_term_frozen_values(topology, L, r, expected):
    assert vbl_dmdt_3node(topology, L, r) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("topology", [T413, T141, T222, Topology([3, 1, 2])])
@pytest.mark.parametrize("L", [2, 5])
def test_vbl_matches_closed_form_families(topology, L):
    r_max = min(dmt(h, 0.0) for h in topology.hops())  # past here both are 0
    for r in np.linspace(0.0, L, 21):
        want = vbl_closed_form(topology, L, float(r))
        got = vbl_dmdt_3node(topology, L, float(r))
        assert got == pytest.approx(want, abs=1e-6), f"r={r}"


def test_vbl_closed_form_published_middle_branch():
    # On c in (1/2, 2/3) the published (2, 2, 2) form has a third branch
    # that sits strictly above the optimum the search finds; outside that
    # band the two readings agree.
    assert vbl_closed_form(T222, 4, 2.5) == pytest.approx(14.0 / 11.0)
    assert vbl_closed_form(T222, 4, 2.5, paper_branches=True) == pytest.approx(4.0 / 3.0)
    for r in np.linspace(0.0, 4.0, 41):
        default = vbl_closed_form(T222, 4, float(r))
        published = vbl_closed_form(T222, 4, float(r), paper_branches=True)
        assert published >= default - 1e-12
        c = r / 4.0
        if not 0.5 < c < 2.0 / 3.0:
            assert published == default


def test_vbl_saturation_flag():
    value, saturated = vbl_dmdt_3node(T222, 2, 2.5, with_flag=True)
    assert value == 0.0 and saturated
    value, saturated = vbl_dmdt_3node(T222, 4, 1.0, with_flag=True)
    assert value == pytest.approx(22.0 / 7.0) and not saturated
    # (M1, 1, M3): the chain dies at c = 1/2 exactly
    assert vbl_dmdt_3node(T413, 4, 2.0) == 0.0


@pytest.mark.parametrize(
    "topology, L, r, expected",
    [
        (T413, 4, 1.0, 6.0),
        (T413, 4, 0.0, 12.0),
        (T222, 4, 1.0, 10.0),
        (T222, 2, 1.5, 1.0),
    ],
)
def test_vbl_short_term_frozen_values(topology, L, r, expected):
    assert vbl_dmdt_3node(topology, L, r, ST) == pytest.approx(expected, abs=1e-9)


def test_vbl_validation():
    with pytest.raises(ValueError):
        vbl_dmdt_3node(Topology([2, 2]), 4, 1.0)
    with pytest.raises(ValueError):
        vbl_dmdt_3node(Topology([2, 2, 2, 2]), 4, 1.0)
    with pytest.raises(ValueError):
        vbl_dmdt_3node(T222, 0, 1.0)
    with pytest.raises(ValueError):
        vbl_closed_form(Topology([3, 2, 3]), 4, 1.0)
    with pytest.raises(ValueError):
        vbl_closed_form(Topology([2, 2]), 4, 1.0)


# ---------------------------------------------------------------------------
# fixed split of a shared budget (FBL)


@pytest.mark.parametrize(
    "topology, L, r, channel, zero, expected",
    [
        (T413, 4, 1.0, LT, False, 1.5),
        (T413, 10, 1.0, LT, False, 2.625),
        (T413, 4, 1.0, ST, False, 3.0),
        (T413, 10, 1.0, ST, False, 21.0),
        (T413, 4, 0.0, LT, False, 7.0),
        (T413, 3, 0.0, LT, False, 7.0),
        (T413, 2, 1.0, LT, True, 0.0),
        (T413, 2, 0.5, LT, True, 1.5),
        (T222, 2, 1.0, LT, True, 1.0),
        (T222, 4, 1.0, LT, True, 3.0),
        (T222, 4, 1.0, LT, False, 3.5),
        (T222, 10, 1.0, LT, True, 11.0 / 3.0),
        (T141, 3, 0.5, LT, False, 4.0),
        (T141, 3, 0.5, LT, True, 3.0),
    ],
)
def test_fbl_frozen_values(topology, L, r, channel, zero, expected):
    got = fbl_dmdt_3node(topology, L, r, channel, allow_zero_rounds=zero)
    assert got == pytest.approx(expected, abs=1e-9)


def test_fbl_starved_hop_contributes_nothing():
    # A starved hop times out with probability one, so each boundary split
    # is worth just the other hop's diversity; the minimization then lands
    # on the weaker of the two instead of the interior sum.
    assert fbl_dmdt_3node(T413, 4, 0.0, allow_zero_rounds=True) == pytest.approx(3.0)


def test_fbl_split_range_validation():
    with pytest.raises(ValueError):
        fbl_dmdt_3node(T413, 2, 1.0)  # strict range needs a round per hop
    with pytest.raises(ValueError):
        fbl_dmdt_3node(T413, 1, 1.0, allow_zero_rounds=True)


# ---------------------------------------------------------------------------
# fixed per-hop windows


def test_fixed_is_weakest_link():
    for w1, w2 in [(1, 1), (2, 3), (4, 1)]:
        for r in (0.0, 0.5, 1.0):
            want = min(dmt(AntennaPair(4, 1), r / w1), dmt(AntennaPair(1, 3), r / w2))
            assert fixed_dmdt_3node(T413, w1, w2, r) == pytest.approx(want)
    with pytest.raises(ValueError):
        fixed_dmdt_3node(T413, 0, 2, 1.0)


def test_fixed_optimal_windows_frozen_values():
    opt = fixed_optimal_windows(T413, 4, 1.0)
    assert opt.windows == (2, 2)
    assert opt.value == pytest.approx(1.5)
    assert opt.split[0] == pytest.approx(1.725082782, abs=1e-6)
    assert opt.split_value == pytest.approx(1.6812706956, abs=1e-6)

    opt = fixed_optimal_windows(T413, 10, 1.0)
    assert opt.windows == (3, 7)
    assert opt.value == pytest.approx(18.0 / 7.0)
    assert opt.split[0] == pytest.approx(2.8210916542, abs=1e-6)
    assert opt.split_value == pytest.approx(2.5821091654, abs=1e-6)


def test_fixed_optimal_windows_zero_rate():
    opt = fixed_optimal_windows(T413, 4, 0.0)
    assert opt.split == (2.0, 2.0)
    assert opt.split_value == pytest.approx(3.0)
    assert opt.value == pytest.approx(3.0)
    with pytest.raises(ValueError):
        fixed_optimal_windows(T413, 1, 1.0)


def test_fixed_real_split_dominates_integer_split():
    for r in (0.25, 0.75, 1.0):
        opt = fixed_optimal_windows(T222, 5, r)
        assert opt.split_value >= opt.value - 1e-9
        assert opt.split[0] + opt.split[1] == pytest.approx(5.0)


# ---------------------------------------------------------------------------
# power scaling


@pytest.mark.parametrize("g", [1.5, 2.0, 3.0])
def test_power_scaling_identity_all_protocols(g):
    r = 0.8
    assert fixed_dmdt_3node(T413, 2, 2, r, power_exponent=g) == pytest.approx(
        g * fixed_dmdt_3node(T413, 2, 2, r / g)
    )
    for channel in (LT, ST):
        assert fbl_dmdt_3node(
            T413, 4, r, channel, power_exponent=g
        ) == pytest.approx(g * fbl_dmdt_3node(T413, 4, r / g, channel))
        assert vbl_dmdt_3node(
            T413, 4, r, channel, power_exponent=g
        ) == pytest.approx(g * vbl_dmdt_3node(T413, 4, r / g, channel))


def test_power_scaling_never_hurts():
    for r in (0.0, 0.5, 1.0):
        base = vbl_dmdt_3node(T222, 4, r)
        assert vbl_dmdt_3node(T222, 4, r, power_exponent=2.0) >= base - 1e-12


# ---------------------------------------------------------------------------
# longer chains


def test_nnode_vbl_weakest_window():
    assert nnode_vbl_dmdt(Topology([4, 1, 3, 1]), 4, 1.0) == pytest.approx(2.0)
    assert nnode_vbl_dmdt(Topology([2, 2, 2, 2]), 4, 1.0) == pytest.approx(22.0 / 7.0)
    assert nnode_vbl_dmdt(Topology([2, 2, 2, 2]), 6, 1.0) == pytest.approx(38.0 / 11.0)
    # dual route: explicit minimum over the contiguous windows
    topo = Topology([3, 1, 4, 2])
    want = min(vbl_dmdt_3node(sub, 5, 0.7) for sub in topo.sub_topologies())
    assert nnode_vbl_dmdt(topo, 5, 0.7) == pytest.approx(want)
    with pytest.raises(ValueError):
        nnode_vbl_dmdt(Topology([2, 2]), 4, 1.0)


def test_nnode_fixed_bounds_frozen():
    topo = Topology([2, 2, 2, 2])
    lower, upper = nnode_fixed_bounds(topo, WindowAllocation([2, 2, 2], 6), 1.0)
    assert lower == pytest.approx(3.0)
    assert upper == pytest.approx(38.0 / 11.0)
    assert lower <= upper + 1e-12
    with pytest.raises(ValueError):
        nnode_fixed_bounds(topo, WindowAllocation([2, 2], 6), 1.0)
    with pytest.raises(ValueError):
        nnode_fixed_bounds(Topology([2, 2]), WindowAllocation([2], 2), 1.0)


def test_nnode_fbl_bounds_frozen():
    topo = Topology([2, 2, 2, 2])
    lower, upper = nnode_fbl_bounds(topo, 8, 1.0)
    assert lower == pytest.approx(22.0 / 7.0)
    assert upper == pytest.approx(3.6)
    with pytest.raises(ValueError):
        nnode_fbl_bounds(topo, 4, 1.0)  # budget must exceed the node count


def test_shared_budget_bracket_spot():
    # The dynamic-sharing values at shrunk and full budgets sandwich the
    # offline-split protocol once starved splits are admitted.
    lower, upper = nnode_fbl_bounds(T413, 10, 1.0)
    middle = fbl_dmdt_3node(T413, 10, 1.0, allow_zero_rounds=True)
    assert lower == pytest.approx(2.5)
    assert upper == pytest.approx(8.0 / 3.0)
    assert lower - 1e-9 <= middle <= upper + 1e-9


def test_large_budget_gap_closes():
    vbl = vbl_dmdt_3node(T222, 100, 1.0)
    fbl = fbl_dmdt_3node(T222, 100, 1.0, allow_zero_rounds=True)
    assert vbl == pytest.approx(3.969849246, abs=1e-6)
    assert fbl == pytest.approx(3.969696970, abs=1e-6)
    assert 0.0 <= vbl - fbl < 2e-4


# ---------------------------------------------------------------------------
# curve sweeps


def test_sweep_curve_matches_direct_evaluation():
    grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    curve = sweep_curve(VblArq(4), T413, LT, grid)
    assert curve.rates == tuple(grid)
    for r, d in curve.samples:
        assert d == pytest.approx(vbl_dmdt_3node(T413, 4, r))
    assert curve.gaps == ()


def test_sweep_curve_nnode_dispatch():
    topo = Topology([2, 2, 2, 2])
    curve = sweep_curve(VblArq(6), topo, LT, [0.0, 1.0])
    assert curve.values[1] == pytest.approx(38.0 / 11.0)


def test_sweep_curve_first_point_raises_on_config_error():
    # Budget 2 leaves no strict split at any rate, so the very first point
    # must surface the mistake instead of yielding an all-gap curve.
    with pytest.raises(ValueError):
        sweep_curve(FblArq(2), T413, LT, [0.0, 0.5])
    with pytest.raises(ValueError):
        sweep_curve(FixedArq([2, 2]), Topology([2, 2, 2, 2]), LT, [0.0])
    with pytest.raises(ValueError):
        sweep_curve(FixedArq([2, 2, 2]), T413, LT, [0.0])


def test_sweep_curve_grid_validation():
    with pytest.raises(ValueError):
        sweep_curve(VblArq(4), T413, LT, [])
    with pytest.raises(ValueError):
        sweep_curve(VblArq(4), T413, LT, [-0.5, 0.0])
    with pytest.raises(ValueError):
        sweep_curve(VblArq(4), T413, LT, [0.0, 0.0])
    with pytest.raises(TypeError):
        sweep_curve("vbl", T413, LT, [0.0])


def test_curve_invariants():
    good = DmdtCurve(VblArq(4), LT, T413, ((0.0, 2.0), (0.5, 1.0), (1.0, math.nan)),
                     gaps=(1.0,))
    assert good.rates == (0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        DmdtCurve(VblArq(4), LT, T413, ((0.5, 1.0), (0.5, 0.5)))
    with pytest.raises(ValueError):
        DmdtCurve(VblArq(4), LT, T413, ((0.0, 1.0), (0.5, -0.2)))
    with pytest.raises(ValueError):
        DmdtCurve(VblArq(4), LT, T413, ((0.0, 1.0), (0.5, 2.0)))
