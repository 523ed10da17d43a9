import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqthermo import otto as ot
from sqthermo.params import ConsistencyError, DomainError, SqueezeParams

from conftest import N_TH_BETA1

N2_AT_06 = 1.2163692151608709  # 1 / (e^0.6 - 1)
W_STANDARD = 1.2687850165830889  # 2 (n2 - n1) at beta2 omega2 = 0.6
SINH2_RQ_W6 = 0.081075121926131907
R_Q_W6 = 0.28102337149030319
R_W_W6 = 0.25708673248845736
SQRT5 = 2.2360679774997897
W_MAX_HOT_R05 = 2.7244484895016744  # (2 n + 1) sinh^2(0.5) at beta omega = 0.2


def P(omega2=3.0, r=0.0, theta=0.0, beta1=1.0, beta2=0.2, omega1=1.0):
    return ot.CycleParams(beta1, beta2, omega1, omega2, SqueezeParams(r, theta))


cycle_params = st.builds(
    lambda b1, ratio, w2, r, th: P(omega2=w2, r=r, theta=th, beta1=b1, beta2=b1 * ratio),
    st.floats(0.2, 5.0),
    st.floats(0.05, 1.0),
    st.floats(1.0, 12.0),
    st.floats(0.0, 1.5),
    st.floats(0.0, 6.28),
)


# ---------------------------------------------------------------- parameters


def test_params_validation():
    with pytest.raises(DomainError):
        P(beta2=2.0)
    with pytest.raises(DomainError):
        P(omega2=0.5)
    with pytest.raises(DomainError):
        P(beta1=-1.0)
    with pytest.raises(DomainError):
        P(omega2=math.inf)


def test_params_derived():
    p = P()
    assert p.n1 == pytest.approx(N_TH_BETA1, rel=1e-14)
    assert p.n2 == pytest.approx(N2_AT_06, rel=1e-14)
    assert p.omega2_star == pytest.approx(5.0)
    assert p.eta_c == pytest.approx(0.8)
    assert p.replace(r=0.4).r == 0.4
    assert ot.CycleParams.from_dict(p.to_dict()) == p


# ---------------------------------------------------------------- energetics


def test_standard_otto_limit():
    rep = ot.analyze_cycle(P())
    assert rep.W_out == pytest.approx(W_STANDARD, rel=1e-13)
    assert rep.Q_BC == pytest.approx(3 * (N2_AT_06 - N_TH_BETA1), rel=1e-13)
    assert rep.eta == pytest.approx(2 / 3, rel=1e-13)
    assert rep.DeltaA_BC == 0.0
    assert rep.region is ot.Region.I


def test_reversible_point_has_zero_entropy_production():
    rep = ot.analyze_cycle(P(omega2=5.0))
    assert rep.Sigma_cyc == pytest.approx(0.0, abs=1e-14)
    assert rep.W_out == pytest.approx(0.0, abs=1e-14)


@given(cycle_params)
def test_first_law(p):
    rep = ot.analyze_cycle(p)
    assert rep.first_law_residual() <= 1e-12 * (1 + abs(rep.Q_BC) + abs(rep.Q_DA))


@given(cycle_params)
def test_second_law(p):
    rep = ot.analyze_cycle(p)
    assert rep.Sigma_cyc >= -1e-12 * (1 + abs(rep.Q_BC))


@given(cycle_params)
def test_efficiency_bounded_by_eta_max(p):
    rep = ot.analyze_cycle(p)
    if rep.region in (ot.Region.I, ot.Region.III) and rep.eta is not None:
        # eta_max follows from Sigma >= 0 and may exceed 1; eta itself cannot
        assert rep.eta <= rep.eta_max + 1e-9 * (1 + abs(rep.eta_max))
        assert rep.eta <= 1 + 1e-12
    if rep.region is ot.Region.IV:
        assert rep.eta == 1.0
    if rep.region is ot.Region.II:
        assert rep.eta is None and rep.eta_max is None


@given(cycle_params)
def test_free_energy_gap_is_entropy_production(p):
    fe = ot.free_energy_decomposition(p)
    rep = ot.analyze_cycle(p)
    assert fe.gap == pytest.approx(rep.Sigma_cyc / p.beta1, abs=1e-10 * (1 + abs(rep.Q_BC)))
    assert fe.gap >= -1e-10


@given(cycle_params)
def test_unsqueezed_theta_irrelevant(p):
    a = ot.analyze_cycle(p)
    b = ot.analyze_cycle(p.replace(theta=(p.sq.theta + 1.0)))
    assert ot.report_deviation(a, b) == 0.0


def test_squeezing_raises_work():
    w = [ot.analyze_cycle(P(r=r)).W_out for r in (0.0, 0.3, 0.6, 0.9)]
    assert np.all(np.diff(w) > 0)


# ---------------------------------------------------------------- regions


def test_classify_tie_rule():
    assert ot.classify_codes(0.0, 0.0, 0.0) == 1
    assert ot.classify_codes(-1.0, -1.0, 1.0) == 2
    assert ot.classify_codes(1.0, -1.0, 1.0) == 3
    assert ot.classify_codes(1.0, 1.0, 1.0) == 4
    assert ot.classify_codes(-1.0, 1.0, 1.0) == 0
    assert ot.classify_codes(1e-13, -1e-13, 1.0) == 2
    assert ot.classify_codes(1e-13, 1.0, -1e-13) == 1


def test_boundaries_at_omega6():
    b = ot.region_boundaries(1.0, 0.2, 1.0, 6.0)
    assert math.sinh(b.r_q) ** 2 == pytest.approx(SINH2_RQ_W6, rel=1e-13)
    assert b.r_q == pytest.approx(R_Q_W6, rel=1e-13)
    assert b.r_w == pytest.approx(R_W_W6, rel=1e-13)
    assert b.r_c is None
    assert ot.analyze_cycle(P(omega2=6.0, r=b.r_q)).Q_BC == pytest.approx(0.0, abs=1e-13)
    assert ot.analyze_cycle(P(omega2=6.0, r=b.r_w)).W_out == pytest.approx(0.0, abs=1e-13)


def test_region_sequence_above_reversible_frequency():
    b = ot.region_boundaries(1.0, 0.2, 1.0, 6.0)
    assert ot.analyze_cycle(P(omega2=6.0, r=0.5 * b.r_w)).region is ot.Region.II
    assert ot.analyze_cycle(P(omega2=6.0, r=0.5 * (b.r_w + b.r_q))).region is ot.Region.III
    assert ot.analyze_cycle(P(omega2=6.0, r=1.5 * b.r_q)).region is ot.Region.IV


@pytest.mark.parametrize("omega2", [1.5, 2.5, 4.0])
def test_carnot_crossing(omega2):
    b = ot.region_boundaries(1.0, 0.2, 1.0, omega2)
    assert b.r_q is None or omega2 == 5.0
    rep = ot.analyze_cycle(P(omega2=omega2, r=b.r_c))
    assert rep.eta == pytest.approx(rep.eta_c, abs=1e-12)
    assert ot.analyze_cycle(P(omega2=omega2, r=b.r_c + 0.05)).eta > rep.eta_c


def test_phase_diagram_layout():
    w2 = np.linspace(1.0, 8.0, 50)
    r = np.linspace(0.0, 1.5, 40)
    pd = ot.phase_diagram(1.0, 0.2, w2, r)
    assert pd.codes.shape == (50, 40)
    assert set(np.unique(pd.codes)) == {1, 2, 3, 4}
    assert set(np.unique(pd.codes[:, 0])) <= {1, 2}
    rows = pd.rows()
    assert rows[0][:2] == (1.0, 0.0) and rows[1][:2] == (1.0, r[1])
    # eta is undefined in region II and at the single point where every flux vanishes
    undefined = {(w, rr) for w, rr, reg, e in rows if e is None and reg != "II"}
    assert undefined == {(5.0, 0.0)}
    assert all(e is None for *_, reg, e in rows if reg == "II")
    with pytest.raises(DomainError):
        ot.phase_diagram(1.0, 0.2, w2, [-0.1])


def test_sign_pattern_and_classify_region():
    rep = ot.analyze_cycle(P())
    assert ot.sign_pattern(rep) == (1, 1, -1)
    assert ot.classify_region(rep) is ot.Region.I


# ---------------------------------------------------------------- frequencies and bounds


def test_eta_ht_and_max_power_frequency_unsqueezed():
    p = P()
    assert ot.eta_ht(p) == pytest.approx(p.eta_c)
    assert ot.max_power_frequency_ht(p) == pytest.approx(SQRT5, rel=1e-15)


def test_numeric_max_power_high_temperature_unsqueezed():
    p = P(beta1=1e-3, beta2=2e-4)
    assert ot.numeric_max_power_frequency(p) == pytest.approx(SQRT5, rel=1e-3)


def test_eta_max_reduces_to_carnot():
    rep = ot.analyze_cycle(P(r=1e-6))
    assert rep.eta_max == pytest.approx(rep.eta_c, abs=1e-10)


# ---------------------------------------------------------------- explicit strokes


@given(cycle_params)
def test_numeric_cycle_matches_closed_form(p):
    num = ot.verify_cycle_numeric(p)
    assert ot.report_deviation(num, ot.analyze_cycle(p)) < 1e-8


def test_numeric_cycle_failure_raises(monkeypatch):
    monkeypatch.setattr(ot, "RELAX_GT", 1.0)
    with pytest.raises(ConsistencyError):
        ot.verify_cycle_numeric(P(r=0.5))


def test_fock_stroke_check():
    p = ot.CycleParams(3.0, 1.5, 1.0, 1.2, SqueezeParams(0.3, 0.5))
    assert ot.fock_stroke_check(p, 40, gamma_t=2.0) < 1e-8


# ---------------------------------------------------------------- serialization and datasets


def test_report_json_round_trip():
    rep = ot.analyze_cycle(P(r=0.7, theta=1.0))
    back = ot.CycleReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert back == rep


def test_fig2_rows():
    header, rows = ot.fig2_rows()
    assert header[0] == "omega2" and len(header) == 1 + len(ot.FIG2_R)
    assert len(rows) == 351 and rows[0][0] == 1.0 and rows[-1][0] == 8.0
    # without squeezing there is no work at omega2 = omega1; with squeezing,
    # unsqueezing alone releases omega1 (2 n2 + 1) sinh^2 r
    assert rows[0][1] == 0.0
    assert rows[0][2] == pytest.approx(W_MAX_HOT_R05, rel=1e-12)
    col0 = np.array([row[1] for row in rows])
    w = np.array([row[0] for row in rows])
    assert w[np.argmax(col0)] == pytest.approx(ot.numeric_max_power_frequency(P()), abs=w[1] - w[0])


def test_fig4_rows():
    header, rows = ot.fig4_rows()
    assert header == ("r", "eta", "eta_max", "eta_c", "eta_ht")
    assert len(rows) == 241
    assert all(row[1] <= row[2] + 1e-12 for row in rows if row[1] is not None)
