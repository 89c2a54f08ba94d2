"""
Scalar flux kernels and the two-point face flux in its equivalent forms.

All functions are vectorized over numpy arrays and accept scalars.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Final

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, KernelOverflowError

FloatArray = NDArray[np.float64]

OVERFLOW_LIMIT: Final[float] = 700.0
BERNOULLI_SERIES_LIMIT: Final[float] = 1e-5
DERIVATIVE_SERIES_LIMIT: Final[float] = 1e-2
LOG_MEAN_SERIES_RTOL: Final[float] = 1e-10


class KernelKind(str, Enum):
    """Available flux kernels."""

    BERNOULLI = "bernoulli"
    SQRA = "sqra"


def _checked(y: ArrayLike) -> FloatArray:
    values = np.asarray(y, dtype=np.float64)
    if np.any(np.abs(values) > OVERFLOW_LIMIT):
        raise KernelOverflowError(
            f"kernel argument {float(np.max(np.abs(values))):.3e} exceeds "
            f"{OVERFLOW_LIMIT}; potentials are probably not scaled"
        )
    return values


def bernoulli(y: ArrayLike) -> FloatArray:
    """``B(y) = y / (exp(y) - 1)`` with ``B(0) = 1``."""
    values = _checked(y)
    small = np.abs(values) < BERNOULLI_SERIES_LIMIT
    safe = np.where(small, 1.0, values)
    series = 1.0 - values / 2.0 + values**2 / 12.0 - values**4 / 720.0
    return np.where(small, series, safe / np.expm1(safe))


def bernoulli_derivative(y: ArrayLike) -> FloatArray:
    """``B'(y) = B(y) (1 - B(y)) / y - B(y)``, with its series near zero."""
    values = _checked(y)
    small = np.abs(values) < DERIVATIVE_SERIES_LIMIT
    safe = np.where(small, 1.0, values)
    b = safe / np.expm1(safe)
    closed = b * (1.0 - b) / safe - b
    series = -0.5 + values / 6.0 - values**3 / 180.0 + values**5 / 5040.0
    return np.where(small, series, closed)


def sqra(y: ArrayLike) -> FloatArray:
    """Square-root approximation kernel ``exp(-y / 2)``."""
    return np.exp(-0.5 * _checked(y))


def sqra_derivative(y: ArrayLike) -> FloatArray:
    return -0.5 * np.exp(-0.5 * _checked(y))


@dataclass(frozen=True)
class FluxKernel:
    """A positive kernel ``B`` with ``B(0) = 1`` and its derivative."""

    kind: KernelKind

    def __call__(self, y: ArrayLike) -> FloatArray:
        if self.kind is KernelKind.BERNOULLI:
            return bernoulli(y)
        return sqra(y)

    def derivative(self, y: ArrayLike) -> FloatArray:
        if self.kind is KernelKind.BERNOULLI:
            return bernoulli_derivative(y)
        return sqra_derivative(y)


BERNOULLI_KERNEL: Final[FluxKernel] = FluxKernel(KernelKind.BERNOULLI)
SQRA_KERNEL: Final[FluxKernel] = FluxKernel(KernelKind.SQRA)


def kernel_for(kind: KernelKind) -> FluxKernel:
    return BERNOULLI_KERNEL if kind is KernelKind.BERNOULLI else SQRA_KERNEL


def stolarsky_log_mean(a: ArrayLike, b: ArrayLike) -> FloatArray:
    """Logarithmic mean of the reciprocals, ``(log(1/a) - log(1/b)) / (1/a - 1/b)``.

    Equal arguments return ``a``; nearly equal ones use a series in
    ``t = (b - a) / a``.
    """
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    if np.any(a_arr <= 0.0) or np.any(b_arr <= 0.0):
        raise DomainError("logarithmic mean needs positive arguments")
    t = (b_arr - a_arr) / a_arr
    close = np.abs(b_arr - a_arr) < LOG_MEAN_SERIES_RTOL * np.maximum(a_arr, b_arr)
    safe_t = np.where(close, 1.0, t)
    closed = b_arr * np.log1p(safe_t) / safe_t
    series = b_arr * (1.0 - t / 2.0 + t**2 / 3.0)
    return np.where(close, series, closed)


def face_flux(
    kernel: FluxKernel,
    a_sigma: ArrayLike,
    diffusion: ArrayLike,
    charge: ArrayLike,
    u_ik: ArrayLike,
    u_0k: ArrayLike,
    u_il: ArrayLike,
    u_0l: ArrayLike,
    phi_k: ArrayLike,
    phi_l: ArrayLike,
) -> FloatArray:
    """Two-point flux of one species from ``K`` towards ``L``.

    Swapping every ``K`` argument with its ``L`` counterpart negates the
    result bitwise.
    """
    z = np.asarray(charge, dtype=np.float64)
    drop = np.asarray(phi_l) - np.asarray(phi_k)
    forward = np.asarray(u_ik) * np.asarray(u_0l) * kernel(z * drop)
    backward = np.asarray(u_il) * np.asarray(u_0k) * kernel(z * -drop)
    return np.asarray(a_sigma) * np.asarray(diffusion) * (forward - backward)


def face_flux_truncated(
    kernel: FluxKernel,
    a_sigma: ArrayLike,
    diffusion: ArrayLike,
    charge: ArrayLike,
    u_ik: ArrayLike,
    u_0k: ArrayLike,
    u_il: ArrayLike,
    u_0l: ArrayLike,
    phi_k: ArrayLike,
    phi_l: ArrayLike,
) -> FloatArray:
    """:func:`face_flux` with every fraction replaced by its positive part."""
    return face_flux(
        kernel,
        a_sigma,
        diffusion,
        charge,
        np.maximum(u_ik, 0.0),
        np.maximum(u_0k, 0.0),
        np.maximum(u_il, 0.0),
        np.maximum(u_0l, 0.0),
        phi_k,
        phi_l,
    )


def _require_bernoulli(kernel: FluxKernel, form: str) -> None:
    if kernel.kind is not KernelKind.BERNOULLI:
        raise DomainError(f"the {form} form holds for the Bernoulli kernel only")


def face_flux_slotboom(
    kernel: FluxKernel,
    a_sigma: ArrayLike,
    diffusion: ArrayLike,
    charge: ArrayLike,
    u_ik: ArrayLike,
    u_0k: ArrayLike,
    u_il: ArrayLike,
    u_0l: ArrayLike,
    phi_k: ArrayLike,
    phi_l: ArrayLike,
) -> FloatArray:
    """Flux as a weighted difference of the Slotboom variables.

    The Slotboom variable of species ``i`` is ``(u_i / u_0) exp(z_i phi)``.
    """
    _require_bernoulli(kernel, "Slotboom")
    fractions = [np.asarray(u, dtype=np.float64) for u in (u_ik, u_0k, u_il, u_0l)]
    if any(np.any(u <= 0.0) for u in fractions):
        raise DomainError("Slotboom form needs strictly positive fractions")
    uik, u0k, uil, u0l = fractions
    z = np.asarray(charge, dtype=np.float64)
    zk = z * np.asarray(phi_k, dtype=np.float64)
    zl = z * np.asarray(phi_l, dtype=np.float64)
    w_k = uik / u0k * np.exp(zk)
    w_l = uil / u0l * np.exp(zl)
    weight = stolarsky_log_mean(np.exp(-zk), np.exp(-zl))
    scale = np.asarray(a_sigma) * np.asarray(diffusion)
    return scale * u0k * u0l * weight * (w_k - w_l)


def split_flux(
    kernel: FluxKernel,
    a_sigma: ArrayLike,
    diffusion: ArrayLike,
    charge: ArrayLike,
    u_ik: ArrayLike,
    u_0k: ArrayLike,
    u_il: ArrayLike,
    u_0l: ArrayLike,
    phi_k: ArrayLike,
    phi_l: ArrayLike,
) -> tuple[FloatArray, FloatArray]:
    """Convective and diffusive parts; their sum is :func:`face_flux`."""
    _require_bernoulli(kernel, "split")
    scale = np.asarray(a_sigma) * np.asarray(diffusion)
    forward = np.asarray(u_ik) * np.asarray(u_0l)
    backward = np.asarray(u_il) * np.asarray(u_0k)
    jump = np.asarray(charge, dtype=np.float64) * (np.asarray(phi_k) - phi_l)
    convective = scale * ((forward + backward) / 2.0) * jump
    diffusive = scale * ((forward - backward) / 2.0) * (kernel(jump) + kernel(-jump))
    return convective, diffusive
