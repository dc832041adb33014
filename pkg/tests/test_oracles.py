"""The frozen constants must agree with their generating oracles."""

import pytest

import oracles as orc


def test_frozen_taker_rate():
    assert float(orc.mp.mpf("0.0333") * orc.mp.exp(-0.5)) == pytest.approx(orc.FROZEN["taker_rate_c005_n10"], rel=1e-15)


def test_frozen_norms():
    assert float(orc.mp.e ** 2) == pytest.approx(orc.FROZEN["norm_B_indicator2"], rel=1e-15)
    assert float(orc.mp.exp(0.5) / 2) == pytest.approx(orc.FROZEN["norm_H_pm1"], rel=1e-15)


def test_frozen_xi_and_V():
    assert float(orc.lattice_xi(0, 1)) == pytest.approx(orc.FROZEN["Xi_c1_s0"], rel=1e-15)
    assert float(orc.equilibrium_rate(0, 1)) == pytest.approx(orc.FROZEN["V_c1_s0"], rel=1e-15)


@pytest.mark.parametrize("c", [0.05, 0.5, 1, 5])
@pytest.mark.parametrize("s", [0, 0.3, 0.5])
def test_two_oracles_for_xi_agree(c, s):
    assert orc.lattice_xi(s, c) == pytest.approx(orc.lattice_xi_jtheta(s, c), rel=1e-30)


def test_frozen_feller_and_tv():
    assert [float(v) for v in orc.feller_points(0, 1, 2)] == pytest.approx(orc.FROZEN["feller_x_c1_s0"], rel=1e-15)
    assert float(orc.entrance_partial_sum(0, 1, 20)) == pytest.approx(orc.FROZEN["entrance_S20_c1_s0"], rel=1e-15)
    assert float(orc.ehrenfest_tv(50)) == pytest.approx(orc.FROZEN["ehrenfest_tv_50"], rel=1e-12)
