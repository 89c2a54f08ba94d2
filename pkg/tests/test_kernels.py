import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnp_fv.errors import DomainError, KernelOverflowError
from pnp_fv.kernels import (
    BERNOULLI_KERNEL,
    SQRA_KERNEL,
    KernelKind,
    bernoulli,
    bernoulli_derivative,
    face_flux,
    face_flux_slotboom,
    face_flux_truncated,
    kernel_for,
    sqra,
    split_flux,
    stolarsky_log_mean,
)

B_ONE = 0.5819767068693265

fractions = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
potentials = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
charges = st.sampled_from([-2, -1, 0, 1, 2])


def test_bernoulli_reference_values() -> None:
    assert float(bernoulli(0.0)) == 1.0
    assert float(bernoulli(1.0)) == pytest.approx(B_ONE, rel=1e-14)
    assert float(bernoulli(-1.0)) == pytest.approx(B_ONE + 1.0, rel=1e-14)


def test_bernoulli_overflow_raises() -> None:
    with pytest.raises(KernelOverflowError):
        bernoulli(701.0)
    with pytest.raises(KernelOverflowError):
        bernoulli_derivative(np.array([0.0, -800.0]))


def test_bernoulli_reflection_identity() -> None:
    y = np.linspace(-50.0, 50.0, 2001)
    assert np.max(np.abs(bernoulli(-y) - bernoulli(y) - y)) <= 1e-13


def test_bernoulli_symmetric_sum_bounds() -> None:
    y = np.logspace(-12, math.log10(50.0), 400)
    total = bernoulli(y) + bernoulli(-y)
    assert np.all(total >= 2.0 * (1.0 - 1e-12))
    assert np.all(total <= (2.0 + y**2 / 6.0) * (1.0 + 1e-12))


def test_bernoulli_near_zero_series() -> None:
    y = np.concatenate([np.logspace(-300, -8, 50), -np.logspace(-300, -8, 50)])
    expected = 1.0 - y / 2.0 + y**2 / 12.0
    np.testing.assert_allclose(bernoulli(y), expected, rtol=1e-14)


def test_bernoulli_is_positive_and_decreasing() -> None:
    y = np.linspace(-40.0, 40.0, 801)
    values = bernoulli(y)
    assert np.all(values > 0.0)
    assert np.all(np.diff(values) < 0.0)


@pytest.mark.parametrize(
    "y", [-30.0, -2.0, -1e-2, -1e-3, 0.0, 1e-6, 1e-2, 0.5, 3.0, 25.0]
)
def test_bernoulli_derivative_matches_finite_differences(y: float) -> None:
    h = 1e-6
    numeric = (float(bernoulli(y + h)) - float(bernoulli(y - h))) / (2.0 * h)
    assert float(bernoulli_derivative(y)) == pytest.approx(numeric, abs=1e-8)


def test_bernoulli_derivative_at_zero() -> None:
    assert float(bernoulli_derivative(0.0)) == -0.5


def test_sqra_kernel() -> None:
    assert float(sqra(0.0)) == 1.0
    assert float(sqra(2.0)) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert float(SQRA_KERNEL.derivative(0.0)) == -0.5
    assert kernel_for(KernelKind.SQRA) is SQRA_KERNEL
    assert kernel_for(KernelKind.BERNOULLI) is BERNOULLI_KERNEL


def test_stolarsky_log_mean_values() -> None:
    assert float(stolarsky_log_mean(2.0, 2.0)) == 2.0
    e = math.e
    assert float(stolarsky_log_mean(1.0, e)) == pytest.approx(e / (e - 1.0), rel=1e-14)
    expected = math.log(1e8) / (1e8 - 1.0)
    assert float(stolarsky_log_mean(1e-8, 1.0)) == pytest.approx(expected, rel=1e-12)


def test_stolarsky_log_mean_symmetry_and_continuity() -> None:
    a = np.array([0.3, 1.0, 5.0, 1e-6])
    b = np.array([0.7, 1.0 + 1e-12, 5.0 + 1e-9, 1e-3])
    forward, backward = stolarsky_log_mean(a, b), stolarsky_log_mean(b, a)
    np.testing.assert_allclose(forward, backward, rtol=1e-13)
    assert float(stolarsky_log_mean(1.0, 1.0 + 1e-12)) == pytest.approx(1.0, rel=1e-11)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, -2.0)])
def test_stolarsky_log_mean_rejects_nonpositive(a: float, b: float) -> None:
    with pytest.raises(DomainError):
        stolarsky_log_mean(a, b)


def test_face_flux_example() -> None:
    flux = face_flux(BERNOULLI_KERNEL, 1.0, 1.0, 1, 0.5, 0.5, 0.25, 0.75, 0.0, 1.0)
    expected = 0.375 * B_ONE - 0.125 * (B_ONE + 1.0)
    assert float(flux) == pytest.approx(expected, rel=1e-12)
    assert float(flux) == pytest.approx(0.020494, abs=1e-6)


def test_face_flux_without_potential_jump() -> None:
    flux = face_flux(BERNOULLI_KERNEL, 2.0, 0.5, 2, 0.3, 0.4, 0.1, 0.6, 1.5, 1.5)
    assert float(flux) == pytest.approx(2.0 * 0.5 * (0.3 * 0.6 - 0.1 * 0.4), rel=1e-14)


def test_face_flux_vanishes_without_species() -> None:
    flux = face_flux(BERNOULLI_KERNEL, 1.0, 1.0, 1, 0.0, 0.7, 0.0, 0.2, 3.0, -1.0)
    assert float(flux) == 0.0


@settings(max_examples=200)
@given(
    charge=charges,
    u_ik=fractions,
    u_0k=fractions,
    u_il=fractions,
    u_0l=fractions,
    phi_k=potentials,
    phi_l=potentials,
    sqra_kernel=st.booleans(),
)
def test_face_flux_is_bitwise_antisymmetric(
    charge: int,
    u_ik: float,
    u_0k: float,
    u_il: float,
    u_0l: float,
    phi_k: float,
    phi_l: float,
    sqra_kernel: bool,
) -> None:
    kernel = SQRA_KERNEL if sqra_kernel else BERNOULLI_KERNEL
    forward = face_flux(kernel, 1.3, 0.7, charge, u_ik, u_0k, u_il, u_0l, phi_k, phi_l)
    backward = face_flux(kernel, 1.3, 0.7, charge, u_il, u_0l, u_ik, u_0k, phi_l, phi_k)
    assert float(forward) == -float(backward)


@settings(max_examples=100)
@given(
    charge=charges,
    u_ik=fractions,
    u_0k=fractions,
    u_il=fractions,
    u_0l=fractions,
    phi_k=potentials,
    phi_l=potentials,
)
def test_truncated_flux_agrees_on_nonnegative_fractions(
    charge: int,
    u_ik: float,
    u_0k: float,
    u_il: float,
    u_0l: float,
    phi_k: float,
    phi_l: float,
) -> None:
    args = (BERNOULLI_KERNEL, 1.0, 1.0, charge, u_ik, u_0k, u_il, u_0l, phi_k, phi_l)
    assert float(face_flux_truncated(*args)) == float(face_flux(*args))


def test_truncated_flux_cuts_negative_fractions() -> None:
    args = (1.0, 1.0, 1, 0.2, -1.0, 0.3, -1.0, 0.0, 2.0)
    assert float(face_flux_truncated(BERNOULLI_KERNEL, *args)) == 0.0
    args = (1.0, 1.0, 1, -0.1, 0.5, 0.2, 0.4, 0.0, 1.0)
    flux = face_flux_truncated(BERNOULLI_KERNEL, *args)
    assert float(flux) == pytest.approx(-0.2 * 0.5 * float(bernoulli(-1.0)), rel=1e-15)


def test_slotboom_form_matches_face_flux(rng: np.random.Generator) -> None:
    size = 1000
    u_ik, u_il = rng.uniform(0.01, 0.49, size), rng.uniform(0.01, 0.49, size)
    u_0k, u_0l = rng.uniform(0.01, 0.5, size), rng.uniform(0.01, 0.5, size)
    phi_k, phi_l = rng.uniform(-10.0, 10.0, size), rng.uniform(-10.0, 10.0, size)
    z = rng.choice([-2.0, -1.0, 1.0, 2.0], size)
    a = rng.uniform(0.5, 2.0, size)
    args = (BERNOULLI_KERNEL, a, 1.0, z, u_ik, u_0k, u_il, u_0l, phi_k, phi_l)

    direct = face_flux(*args)
    slotboom = face_flux_slotboom(*args)
    y = z * (phi_l - phi_k)
    scale = a * (u_ik * u_0l * bernoulli(y) + u_il * u_0k * bernoulli(-y))
    assert np.all(np.abs(direct - slotboom) <= 1e-11 * scale)


def test_slotboom_form_domain() -> None:
    with pytest.raises(DomainError):
        face_flux_slotboom(BERNOULLI_KERNEL, 1.0, 1.0, 1, 0.0, 0.5, 0.2, 0.4, 0.0, 1.0)
    with pytest.raises(DomainError):
        face_flux_slotboom(SQRA_KERNEL, 1.0, 1.0, 1, 0.1, 0.5, 0.2, 0.4, 0.0, 1.0)


def test_split_flux_example() -> None:
    convective, diffusive = split_flux(
        BERNOULLI_KERNEL, 1.0, 1.0, 1, 0.5, 0.5, 0.25, 0.75, 0.0, 1.0
    )
    assert float(convective) == pytest.approx(-0.25, rel=1e-14)
    assert float(diffusive) == pytest.approx(0.270494, abs=1e-6)
    flux = face_flux(BERNOULLI_KERNEL, 1.0, 1.0, 1, 0.5, 0.5, 0.25, 0.75, 0.0, 1.0)
    assert float(convective + diffusive) == pytest.approx(float(flux), abs=1e-14)


def test_split_flux_without_drift() -> None:
    args = (1.0, 1.0, 1, 0.5, 0.5, 0.25, 0.75, 0.7, 0.7)
    convective, _ = split_flux(BERNOULLI_KERNEL, *args)
    assert float(convective) == 0.0
    args = (1.0, 1.0, 0, 0.5, 0.5, 0.25, 0.75, 0.0, 3.0)
    convective, _ = split_flux(BERNOULLI_KERNEL, *args)
    assert float(convective) == 0.0


def test_split_flux_sums_to_face_flux(rng: np.random.Generator) -> None:
    size = 200
    u = rng.uniform(0.0, 0.5, (4, size))
    phi = rng.uniform(-5.0, 5.0, (2, size))
    args = (BERNOULLI_KERNEL, 1.0, 1.0, -1, u[0], u[1], u[2], u[3], phi[0], phi[1])
    convective, diffusive = split_flux(*args)
    y = -(phi[1] - phi[0])
    scale = u[0] * u[3] * bernoulli(y) + u[2] * u[1] * bernoulli(-y)
    scale += np.abs(convective)
    error = np.abs(convective + diffusive - face_flux(*args))
    assert np.all(error <= 1e-12 * (1.0 + scale))
    with pytest.raises(DomainError):
        split_flux(SQRA_KERNEL, *args[1:])
