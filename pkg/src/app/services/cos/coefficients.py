"""
╔══════════════════════════════════════════════════════════════════════════╗
║               Fourier-Cosine Coefficients of the Value Function         ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  On [a, b] with ω_k = kπ/(b − a) every coefficient is                  ║
║                                                                        ║
║      (2/(b − a)) ∫_{x1}^{x2} f(y) cos(ω_k (y − a)) dy                  ║
║                                                                        ║
║  for f = payoff (G_k), rapidity penalty (Q_k) or continuation (Ĉ_k).   ║
║  All three are closed form. Ĉ = e^{−rΔt} Re(M z) with                  ║
║  z_l = w_l V_l φ_l (w_0 = ½), M = −(i/π)(M^s + M^c).                   ║
║                                                                        ║
║  M^c_{kl} = [p_l q_k]_{x1}^{x2} / (lβ + k)                             ║
║  M^s_{kl} = [p_l q̄_k]_{x1}^{x2} / (lβ − k)                             ║
║  p_l(x) = e^{iπl(βx − a)/(b − a)},  q_k(x) = e^{iπk(x − a)/(b − a)}    ║
║                                                                        ║
║  The divisors depend on β only, so `ContinuationKernel` builds them    ║
║  once and applies M per subinterval through its two endpoints, with    ║
║  O(N²) work and no dense M. For β = 1 the divisors are Toeplitz        ║
║  (1/(l − k)) and Hankel (1/(l + k)) and the products go through FFT.   ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

import logging

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import matmul_toeplitz

from src.app.models.contract_model import ContractSpec
from src.app.models.price_model import PolynomialMap, TruncationRange
from src.app.models.valuation_model import MklBlock
from src.app.services.contract.contract_service import step_penalty

logger = logging.getLogger(__name__)

# |lβ ± k| below this is treated as the removable singularity
SINGULAR_GUARD = 1e-12
BETA_ONE_TOLERANCE = 1e-14


# ─── Basics ─────────────────────────────────────────────────────────────


def frequencies(n_terms: int, truncation: TruncationRange) -> np.ndarray:
    return np.pi * np.arange(n_terms) / truncation.width


def primed_weights(n_terms: int) -> np.ndarray:
    """Weights of the primed sum Σ′ (first term halved)."""
    weights = np.ones(n_terms)
    weights[0] = 0.5
    return weights


def continuation_basis(x, phi: np.ndarray, beta: float, truncation: TruncationRange) -> np.ndarray:
    """Rows w_k φ_k e^{iω_k(βx − a)} for every x; (basis @ V).real is the undiscounted ĉ."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    omega = frequencies(phi.size, truncation)
    return (primed_weights(phi.size) * phi)[None, :] * np.exp(1j * np.outer(beta * x - truncation.a, omega))


def continuation_value(v_next: np.ndarray, x, law, dt: float, r: float, truncation: TruncationRange):
    """ĉ(x) = e^{−rΔt} Σ′_k Re{φ_k e^{iω_k(βx − a)}} V_k."""
    phi, beta = law.char_fn(frequencies(v_next.size, truncation), dt)
    values = np.exp(-r * dt) * (continuation_basis(x, phi, beta, truncation) @ v_next).real
    return float(values[0]) if np.ndim(x) == 0 else values


def cosine_series(coeffs: np.ndarray, y, truncation: TruncationRange):
    """Σ′_k coeffs_k cos(ω_k (y − a)): the function a coefficient vector represents."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    omega = frequencies(coeffs.size, truncation)
    values = np.cos(np.outer(y - truncation.a, omega)) @ (primed_weights(coeffs.size) * coeffs)
    return values


# ─── Terminal, Payoff and Penalty Coefficients ──────────────────────────


def terminal_coefficients(spec: ContractSpec, n_terms: int) -> np.ndarray:
    """
    V_k(t_{M+1}, e) for every level: the settlement penalty does not depend on
    the price, so V_0 = 2 q_s(e) and all other terms vanish.
    """
    values = np.zeros((spec.grid.n_levels + 1, n_terms))
    values[:, 0] = [2.0 * spec.settlement_value(e) for e in spec.grid.levels]
    return values


def polynomial_cosine_integrals(poly: Polynomial, x1: float, x2: float, n_terms: int,
                                truncation: TruncationRange) -> np.ndarray:
    """
    (2/(b − a)) ∫_{x1}^{x2} P(y) cos(ω_k (y − a)) dy for a polynomial P.

    Tabular integration by parts, exact for any degree:
        Σ_j (−1)^j [P^{(2j)} sin(ω(y − a)) / ω^{2j+1} + P^{(2j+1)} cos(ω(y − a)) / ω^{2j+2}]
    """
    out = np.empty(n_terms)
    primitive = poly.integ()
    out[0] = primitive(x2) - primitive(x1)
    if n_terms == 1:
        return 2.0 / truncation.width * out

    omega = frequencies(n_terms, truncation)[1:]
    derivatives = [poly.deriv(d) for d in range(poly.degree() + 1)]
    total = np.zeros(n_terms - 1)
    for end, sign in ((x2, 1.0), (x1, -1.0)):
        sin_end = np.sin(omega * (end - truncation.a))
        cos_end = np.cos(omega * (end - truncation.a))
        for d, derivative in enumerate(derivatives):
            trig = sin_end if d % 2 == 0 else cos_end
            total += sign * (-1.0) ** (d // 2) * derivative(end) * trig / omega ** (d + 1)
    out[1:] = total
    return 2.0 / truncation.width * out


def indicator_cosine_integrals(x1: float, x2: float, n_terms: int, truncation: TruncationRange) -> np.ndarray:
    """(2/(b − a)) ∫_{x1}^{x2} cos(ω_k (y − a)) dy."""
    out = np.empty(n_terms)
    out[0] = 2.0 / truncation.width * (x2 - x1)
    k = np.arange(1, n_terms)
    omega = frequencies(n_terms, truncation)[1:]
    out[1:] = 2.0 / (np.pi * k) * (np.sin(omega * (x2 - truncation.a)) - np.sin(omega * (x1 - truncation.a)))
    return out


def payoff_coefficients_G(spec: ContractSpec, price_map: PolynomialMap, x1: float, x2: float,
                          step: int, n_terms: int, truncation: TruncationRange) -> np.ndarray:
    """G_k of the payoff −Φ(y)·Δe/η_eff (η_eff = η when charging, 1 when releasing)."""
    de = step * spec.grid.delta
    if de == 0.0:
        return np.zeros(n_terms)
    eta_eff = spec.eta if de > 0.0 else 1.0
    return (-de / eta_eff) * polynomial_cosine_integrals(price_map.polynomial, x1, x2, n_terms, truncation)


def penalty_coefficients_Q(spec: ContractSpec, x1: float, x2: float, step: int, n_terms: int,
                           truncation: TruncationRange) -> np.ndarray:
    penalty = step_penalty(spec, step)
    if penalty == 0.0:
        return np.zeros(n_terms)
    return penalty * indicator_cosine_integrals(x1, x2, n_terms, truncation)


# ─── Continuation Coefficients ──────────────────────────────────────────


def _divisors(beta: float, n_terms: int):
    k = np.arange(n_terms)[:, None]
    l = np.arange(n_terms)[None, :]
    return l * beta + k, l * beta - k


def _safe_reciprocal(d: np.ndarray):
    singular = np.abs(d) < SINGULAR_GUARD
    return np.where(singular, 0.0, 1.0 / np.where(singular, 1.0, d)), singular


def mkl_block(x1: float, x2: float, beta: float, n_terms: int, truncation: TruncationRange) -> MklBlock:
    """Dense M^c and M^s of one subinterval, singular entries by their limit."""
    a, width = truncation.a, truncation.width
    k = np.arange(n_terms)[:, None]
    l = np.arange(n_terms)[None, :]
    dc, ds = _divisors(beta, n_terms)
    inv_c, singular_c = _safe_reciprocal(dc)
    inv_s, singular_s = _safe_reciprocal(ds)

    def p(x):
        return np.exp(1j * np.pi * l * (beta * x - a) / width)

    def q(x):
        return np.exp(1j * np.pi * k * (x - a) / width)

    mc = (p(x2) * q(x2) - p(x1) * q(x1)) * inv_c
    ms = (p(x2) * np.conj(q(x2)) - p(x1) * np.conj(q(x1))) * inv_s
    limit = (x2 - x1) * np.pi * 1j / width
    mc = np.where(singular_c, limit * np.exp(-1j * np.pi * (l + k) * a / width), mc)
    ms = np.where(singular_s, limit * np.exp(-1j * np.pi * (l - k) * a / width), ms)
    return MklBlock(mc=mc, ms=ms, beta=beta)


def continuation_coefficients_C(v_next: np.ndarray, phi: np.ndarray, mkl: MklBlock, discount: float) -> np.ndarray:
    """Ĉ_k = e^{−rΔt} Σ′_l Re{φ_l V_l M_{kl}} with a dense M."""
    z = primed_weights(v_next.size) * v_next * phi
    return discount * (mkl.combined @ z).real


class ContinuationKernel:
    """
    Applies M(x1, x2) to z for any subinterval of one truncation range and β.

    Build once per valuation; `apply` costs two O(N²) products per endpoint
    (two FFT products when β = 1 and `use_fft` is set).
    """

    def __init__(self, beta: float, n_terms: int, truncation: TruncationRange, use_fft: bool = False):
        self.beta = beta
        self.n_terms = n_terms
        self.truncation = truncation
        self._k = np.arange(n_terms)
        self._scale = np.pi / truncation.width

        if use_fft and abs(beta - 1.0) > BETA_ONE_TOLERANCE:
            logger.warning(f"⚠️ FFT continuation needs β = 1 (got β={beta:.6f}); using the direct product")
            use_fft = False
        self.use_fft = use_fft

        dc, ds = _divisors(beta, n_terms)
        inv_c, singular_c = _safe_reciprocal(dc)
        inv_s, singular_s = _safe_reciprocal(ds)
        if use_fft:
            self._toeplitz_s, self._toeplitz_c = self._fft_generators(n_terms)
        else:
            self._inv_c, self._inv_s = inv_c, inv_s

        # Singular entries as (k, l, phase) triples; their value is interval-length × phase
        a = truncation.a
        ks_c, ls_c = np.nonzero(singular_c)
        ks_s, ls_s = np.nonzero(singular_s)
        self._singular_k = np.concatenate([ks_c, ks_s])
        self._singular_l = np.concatenate([ls_c, ls_s])
        self._singular_phase = np.concatenate([
            np.exp(-1j * self._scale * (ls_c + ks_c) * a),
            np.exp(-1j * self._scale * (ls_s - ks_s) * a),
        ])

    @staticmethod
    def _fft_generators(n_terms: int):
        """(column, row) generators of the Toeplitz 1/(l − k) and of the reversed Hankel 1/(l + k)."""
        n = np.arange(n_terms, dtype=float)
        with np.errstate(divide="ignore"):
            reciprocal = np.where(n > 0, 1.0 / np.where(n > 0, n, 1.0), 0.0)
        toeplitz_s = (-reciprocal, reciprocal)
        # h(n) = 1/n on 0..2N−2 with h(0) = 0; reversed columns make H Toeplitz
        m = np.arange(2 * n_terms - 1, dtype=float)
        h = np.where(m > 0, 1.0 / np.where(m > 0, m, 1.0), 0.0)
        toeplitz_c = (h[n_terms - 1:], h[n_terms - 1::-1])
        return toeplitz_s, toeplitz_c

    def _endpoint(self, z: np.ndarray, x: float) -> np.ndarray:
        a = self.truncation.a
        p = np.exp(1j * self._scale * self._k * (self.beta * x - a))
        q = np.exp(1j * self._scale * self._k * (x - a))
        y = p * z
        if self.use_fft:
            c_part = matmul_toeplitz(self._toeplitz_c, y[::-1], check_finite=False)
            s_part = matmul_toeplitz(self._toeplitz_s, y, check_finite=False)
        else:
            c_part = self._inv_c @ y
            s_part = self._inv_s @ y
        return q * c_part + np.conj(q) * s_part

    def apply(self, z: np.ndarray, x1: float, x2: float) -> np.ndarray:
        """M(x1, x2) z."""
        total = self._endpoint(z, x2) - self._endpoint(z, x1)
        if self._singular_k.size:
            limit = (x2 - x1) * np.pi * 1j / self.truncation.width
            np.add.at(total, self._singular_k, limit * self._singular_phase * z[self._singular_l])
        return -1j / np.pi * total

    def coefficients(self, z: np.ndarray, x1: float, x2: float, discount: float) -> np.ndarray:
        """Ĉ_k(x1, x2) for a pre-weighted z = w V φ."""
        return discount * self.apply(z, x1, x2).real
