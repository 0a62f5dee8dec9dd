import numpy as np
import pytest

from interface_lab.ansatz import build_ansatz, glue
from interface_lab.geometry import evolve_radial_minimal
from interface_lab.nonlinearity import allen_cahn, build_profile
from interface_lab.simulate import (
    FieldState,
    discrete_energy,
    make_planar_state,
    make_radial_state,
    read_snapshot,
    run_linearized,
    run_nonlinear,
    step_nonlinear,
    track_interface,
)


@pytest.fixture(scope="module")
def nl():
    return allen_cahn()


@pytest.fixture(scope="module")
def profile(nl):
    return build_profile(nl)


def _boosted_kink(profile, eps, v):
    gamma = 1.0 / np.sqrt(1.0 - v * v)

    def u_exact(x, t):
        return profile.w_at(gamma * (x - v * t) / eps)

    def ut0(x):
        return -gamma * v * profile.wp_at(gamma * x / eps) / eps

    return u_exact, ut0


def _planar_kink_state(profile, eps, v, x_lo=-1.5, x_hi=2.0, dx_per_eps=8.0):
    u_exact, ut0 = _boosted_kink(profile, eps, v)
    return make_planar_state(eps, x_lo, x_hi, lambda x: u_exact(x, 0.0), ut0,
                             dx_per_eps=dx_per_eps), u_exact


def test_constant_phase_is_a_fixed_point(nl):
    st = make_planar_state(0.1, -1.0, 1.0, lambda x: np.ones_like(x),
                           lambda x: np.zeros_like(x))
    snaps = run_nonlinear(st, nl, T=0.3)
    assert np.max(np.abs(snaps[-1].u - 1.0)) == 0.0
    track = track_interface(snaps)
    assert not track.breakdown
    assert all(len(c) == 0 for c in track.crossings)


def test_boosted_kink_shape_error(nl, profile):
    # moving-layer oracle: sup error below 5e-3 after one unit of time
    eps, v = 0.05, 0.4
    st, u_exact = _planar_kink_state(profile, eps, v)
    snaps = run_nonlinear(st, nl, T=1.0, snap_every=0.25)
    end = snaps[-1]
    err = np.max(np.abs(end.u - u_exact(end.x, end.t)))
    assert err <= 5e-3


def test_boosted_kink_second_order_convergence(nl, profile):
    eps, v = 0.05, 0.4
    errs = []
    for per in (8.0, 16.0, 32.0):
        st, u_exact = _planar_kink_state(profile, eps, v, dx_per_eps=per)
        end = run_nonlinear(st, nl, T=1.0, snap_every=1.0)[-1]
        errs.append(np.max(np.abs(end.u - u_exact(end.x, end.t))))
    assert errs[0] > errs[1] > errs[2]
    # asymptotic pair: the coarsest level sees partial cancellation between
    # the time-stepping (h^2) and spatial (h^4) error terms
    order = np.log2(errs[1] / errs[2])
    assert order >= 1.9


def test_kink_track_follows_straight_worldline(nl, profile):
    eps, v = 0.05, 0.4
    st, _ = _planar_kink_state(profile, eps, v)
    snaps = run_nonlinear(st, nl, T=1.0, snap_every=0.1)
    track = track_interface(snaps, expected_count=1, reference=lambda t: v * t)
    assert not track.breakdown
    assert track.max_deviation() <= 5e-3


def test_energy_drift_below_one_percent(nl, profile):
    eps, v = 0.05, 0.4
    st, _ = _planar_kink_state(profile, eps, v)
    snaps = run_nonlinear(st, nl, T=1.0, snap_every=0.5)
    e = [discrete_energy(s, nl) for s in snaps]
    assert max(abs(ei - e[0]) for ei in e) <= 0.01 * abs(e[0])


def test_far_field_exponential_decay(nl, profile):
    eps, v = 0.05, 0.4
    st, _ = _planar_kink_state(profile, eps, v)
    end = run_nonlinear(st, nl, T=1.0, snap_every=1.0)[-1]
    # fit the tail envelope on a band where it sits above the solver error
    pos = v * end.t
    for sgn in (-1.0, 1.0):
        s = sgn * (end.x - pos) / eps
        sel = (s >= 3.0) & (s <= 6.0)
        tail = np.abs(end.u[sel] - sgn)
        rate = -np.polyfit(s[sel], np.log(tail), 1)[0]
        assert 1.0 <= rate <= 2.0  # exact rate is sqrt(2)


def test_cfl_and_stiffness_guards(nl):
    st = make_planar_state(0.1, -1.0, 1.0, lambda x: np.tanh(x / 0.1),
                           lambda x: np.zeros_like(x))
    with pytest.raises(ValueError, match="CFL"):
        step_nonlinear(st, 0.6 * st.dx, nl)
    coarse = make_planar_state(0.01, -1.0, 1.0, lambda x: np.zeros_like(x),
                               lambda x: np.zeros_like(x), dx_per_eps=0.2)
    with pytest.raises(ValueError, match="stiffness"):
        step_nonlinear(coarse, 0.4 * coarse.dx, nl)


def test_blowup_sentinel(nl):
    st = make_planar_state(0.1, -1.0, 1.0, lambda x: 1.09 * np.ones_like(x),
                           lambda x: 50.0 * np.exp(-(x / 0.05) ** 2))
    with pytest.raises(RuntimeError, match="sentinel"):
        run_nonlinear(st, nl, T=0.2)


def test_linearized_zero_data_stays_zero(nl, profile):
    eps = 0.1
    st = make_planar_state(eps, -1.0, 1.0, lambda x: np.zeros_like(x),
                           lambda x: np.zeros_like(x))
    ustar = lambda x, t: profile.w_at(x / eps)
    end = run_linearized(st, nl, ustar, T=0.3)[-1]
    assert np.max(np.abs(end.u)) == 0.0


def test_linearized_translation_mode_grows_slowly(nl, profile):
    # the layer-translation mode is neutral on a static background
    eps = 0.1
    phi0 = lambda x: profile.wp_at(x / eps)
    st = make_planar_state(eps, -1.5, 1.5, phi0, lambda x: np.zeros_like(x))
    ustar = lambda x, t: profile.w_at(x / eps)
    snaps = run_linearized(st, nl, ustar, T=1.0, snap_every=0.25)
    sup0 = np.max(np.abs(snaps[0].u))
    for s in snaps[1:]:
        assert np.max(np.abs(s.u)) <= (1.0 + 0.5 * s.t) * sup0


def test_linearized_forced_energy_growth_bounded(nl, profile):
    # a smooth bump source pumps energy at a rate controlled by its size
    eps = 0.1
    st = make_planar_state(eps, -1.5, 1.5, lambda x: np.zeros_like(x),
                           lambda x: np.zeros_like(x))
    ustar = lambda x, t: profile.w_at(x / eps)
    eta = lambda x, t: 0.1 * np.exp(-((x - 0.5) / 0.2) ** 2)
    snaps = run_linearized(st, nl, ustar, T=0.5, eta=eta, snap_every=0.1)
    sups = [float(np.max(np.abs(s.u))) for s in snaps]
    assert sups[-1] > 0.0
    assert sups[-1] <= 0.1 * 0.5 * np.exp(2.0 * 0.5)  # ||eta|| t e^{Ct} crude bound


def test_radial_circle_from_glued_ansatz(nl, profile):
    # unit circle background: the interface radius should track cos(t)
    eps = 0.1
    surface = evolve_radial_minimal(1.0, T=0.8, nt=129, ntheta=16)
    # widest admissible glue band; the tail truncation shed at t = 0 focuses
    # at the axis, so the radial runs also use the finer grid (smaller r_min)
    approx = glue(build_ansatz(profile, surface, eps, k=2),
                  r=0.45 * surface.delta)
    st = make_radial_state(eps, r_max=2.5,
                           u0=lambda r: approx.u_and_ut(r, 0.0)[0],
                           u1=lambda r: approx.u_and_ut(r, 0.0)[1],
                           dx_per_eps=16.0)
    snaps = run_nonlinear(st, nl, T=0.8, snap_every=0.1)
    track = track_interface(snaps, expected_count=1,
                            reference=lambda t: np.cos(t))
    assert not track.breakdown
    assert track.max_deviation() <= 0.12


def test_track_breakdown_flag():
    x = np.linspace(-1.0, 1.0, 101)
    one = FieldState(x, np.cos(4 * np.pi * x), np.zeros_like(x), 0.0, 0.1,
                     "planar")
    track = track_interface([one], expected_count=1)
    assert track.breakdown
    assert track.positions is None


def test_snapshot_roundtrip(tmp_path, nl, profile):
    st = make_radial_state(0.1, 2.0, lambda r: np.tanh((r - 1.0) / 0.1),
                           lambda r: np.zeros_like(r))
    path = tmp_path / "snap.bin"
    from interface_lab.simulate import write_snapshot
    write_snapshot(path, st)
    back = read_snapshot(path)
    assert back.mode == "radial"
    assert back.t == st.t and back.eps == st.eps
    np.testing.assert_array_equal(back.u, st.u)
    np.testing.assert_array_equal(back.ut, st.ut)
    np.testing.assert_allclose(back.x, st.x, rtol=0, atol=1e-14)
    with pytest.raises(ValueError, match="magic"):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"NOPE" + bytes(60))
        read_snapshot(bad)
