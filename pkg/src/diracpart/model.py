"""Model core: Dirac algebra, periodic grid, configuration and state containers.

Conventions used throughout the package:

* spatial domain is the periodic box [-L/2, L/2)^d sampled on M points per
  axis, stored in DFT ("fft") ordering, i.e. x = h*(0, 1, ..., M/2-1, -M/2,
  ..., -1) with h = L/M;
* Fourier transforms carry the continuum normalization
  fhat(k) = integral e^{i k.x} f(x) dx, approximated by the cell-volume-scaled
  DFT; the inverse is f(x) = (2 pi)^{-d} integral e^{-i k.x} fhat(k) dk;
* spinor fields are complex arrays of shape (s,) + grid (single field) or
  (N, s) + grid (a set of N fields); the real representation R psi stacks
  (Re psi, Im psi) into a real 2s-vector.
"""

import dataclasses
import hashlib
import json

import numpy as np

_PAULI1 = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclasses.dataclass(frozen=True)
class DiracAlgebra:
    d: int
    s: int
    alpha: tuple          # d Hermitian s x s matrices
    beta: np.ndarray      # Hermitian s x s matrix


def build_algebra(d):
    """Standard Dirac matrices: 4x4 block representation in 3D, sigma_1/sigma_3 in 1D."""
    if d == 3:
        zero = np.zeros((2, 2), dtype=complex)
        eye = np.eye(2, dtype=complex)
        alpha = tuple(
            np.block([[zero, sig], [sig, zero]]) for sig in (_PAULI1, _PAULI2, _PAULI3)
        )
        beta = np.block([[eye, zero], [zero, -eye]])
        return DiracAlgebra(d=3, s=4, alpha=alpha, beta=beta)
    if d == 1:
        return DiracAlgebra(d=1, s=2, alpha=(_PAULI1.copy(),), beta=_PAULI3.copy())
    raise ValueError(f"unsupported dimension {d}; expected 1 or 3")


class Grid:
    """Periodic grid with DFT-ordered coordinates and wave vectors."""

    def __init__(self, d, L, M):
        if M < 2 or (M & (M - 1)) != 0:
            raise ValueError("M must be a power of two")
        if L <= 0:
            raise ValueError("L must be positive")
        self.d = d
        self.L = float(L)
        self.M = int(M)
        self.h = self.L / self.M
        self.cell = self.h**d
        self.volume = self.L**d
        ax = self.h * (self.M * np.fft.fftfreq(self.M))      # fft-ordered coordinates
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.M, d=self.h)
        self.x = np.meshgrid(*([ax] * d), indexing="ij")
        self.k = np.meshgrid(*([k1] * d), indexing="ij")
        self.r2 = sum(xj**2 for xj in self.x)
        self.k2 = sum(kj**2 for kj in self.k)
        self.shape = (self.M,) * d
        self._axes = tuple(range(-d, 0))

    def fft(self, f):
        """Continuum-normalized forward transform over the trailing d axes."""
        return self.volume * np.fft.ifftn(f, axes=self._axes)

    def ifft(self, fhat):
        return np.fft.fftn(fhat, axes=self._axes) / self.volume

    def neg_k(self, fhat):
        """Index reversal k -> -k in fft ordering, trailing d axes."""
        out = fhat
        for ax in self._axes:
            out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
        return out


@dataclasses.dataclass(frozen=True)
class CouplingProfile:
    """Per-field coupling densities rho_n(x) = amplitudes[n, c] * g_n(|x|).

    kind 'gaussian-decay': g(x) = exp(-|x|^2 / (2 radius^2));
    kind 'compact-support': g(x) = cos^2(pi |x| / (2 radius)) inside |x| < radius,
    identically zero outside (C^1 bump).  Both are even.
    """

    kind: str
    radius: float
    amplitudes: np.ndarray    # (N, s) complex

    def __post_init__(self):
        if self.kind not in ("gaussian-decay", "compact-support"):
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.radius <= 0:
            raise ValueError("coupling radius must be positive")
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))

    def shape_function(self, r2):
        if self.kind == "gaussian-decay":
            return np.exp(-r2 / (2.0 * self.radius**2))
        r = np.sqrt(r2)
        g = np.where(r < self.radius, np.cos(np.pi * r / (2.0 * self.radius)) ** 2, 0.0)
        return g

    def shape_hat(self, d, k2):
        """Analytic Fourier transform of the shape, gaussian kind only."""
        if self.kind != "gaussian-decay":
            raise ValueError("analytic transform only available for gaussian-decay")
        w = self.radius
        return (2.0 * np.pi * w**2) ** (d / 2.0) * np.exp(-(w**2) * k2 / 2.0)


class ModelConfig:
    """Full model: dimension, fields, masses, particle matrix V, coupling, grid, dt."""

    def __init__(self, d, masses, V, coupling, L, M, dt):
        self.d = int(d)
        self.algebra = build_algebra(self.d)
        self.s = self.algebra.s
        self.masses = np.atleast_1d(np.asarray(masses, dtype=float))
        self.N = len(self.masses)
        self.V = np.atleast_2d(np.asarray(V, dtype=float))
        self.coupling = coupling
        self.L = float(L)
        self.M = int(M)
        self.dt = float(dt)
        self._validate()
        self.grid = Grid(self.d, self.L, self.M)
        self._rho = None
        self._rho_hat = None
        self._omega = None

    def _validate(self):
        if np.any(self.masses <= 0):
            raise ValueError("all masses must be positive")
        if self.V.shape != (self.d, self.d):
            raise ValueError(f"V must be {self.d}x{self.d}")
        if not np.allclose(self.V, self.V.T, atol=1e-12):
            raise ValueError("V must be symmetric")
        if np.linalg.eigvalsh(self.V).min() <= 0:
            raise ValueError("V must be positive definite")
        if self.coupling.amplitudes.shape != (self.N, self.s):
            raise ValueError(
                f"coupling amplitudes must have shape ({self.N}, {self.s})"
            )
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    # -- cached field-side arrays ------------------------------------------

    @property
    def rho(self):
        """Coupling densities on the grid, shape (N, s) + grid."""
        if self._rho is None:
            g = self.coupling.shape_function(self.grid.r2)
            amp = self.coupling.amplitudes.reshape((self.N, self.s) + (1,) * self.d)
            self._rho = amp * g
        return self._rho

    @property
    def rho_hat(self):
        if self._rho_hat is None:
            self._rho_hat = self.grid.fft(self.rho)
        return self._rho_hat

    @property
    def omega(self):
        """Dispersion omega_n(k) = sqrt(|k|^2 + m_n^2), shape (N,) + grid."""
        if self._omega is None:
            m2 = (self.masses**2).reshape((self.N,) + (1,) * self.d)
            self._omega = np.sqrt(self.grid.k2[None] + m2)
        return self._omega

    @property
    def kappa2(self):
        """Minimal eigenvalue of V (the oscillator stiffness floor)."""
        return float(np.linalg.eigvalsh(self.V).min())

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        amps = self.coupling.amplitudes
        return {
            "dimension": self.d,
            "n_fields": self.N,
            "masses": self.masses.tolist(),
            "V": self.V.reshape(-1).tolist(),
            "coupling": {
                "kind": self.coupling.kind,
                "radius": self.coupling.radius,
                "amplitudes": [
                    [[float(a.real), float(a.imag)] for a in row] for row in amps
                ],
            },
            "grid": {"L": self.L, "M": self.M},
            "dt": self.dt,
        }

    @classmethod
    def from_dict(cls, doc):
        d = int(doc["dimension"])
        s = 4 if d == 3 else 2
        masses = doc["masses"]
        n = len(masses)
        V = np.asarray(doc["V"], dtype=float).reshape(d, d)
        cdoc = doc["coupling"]
        raw = np.asarray(cdoc["amplitudes"], dtype=float)
        if raw.ndim == 3:                        # [[re, im], ...] per component
            amps = raw[..., 0] + 1j * raw[..., 1]
        elif raw.ndim == 2:                      # real amplitudes per component
            amps = raw.astype(complex)
        else:                                    # one scalar per field -> component 0
            amps = np.zeros((n, s), dtype=complex)
            amps[:, 0] = raw
        prof = CouplingProfile(kind=cdoc["kind"], radius=float(cdoc["radius"]),
                               amplitudes=amps)
        return cls(d=d, masses=masses, V=V, coupling=prof,
                   L=doc["grid"]["L"], M=doc["grid"]["M"], dt=doc.get("dt", 0.01))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def config_hash(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def scaled_coupling(self, factor):
        """Same model with coupling amplitudes scaled by `factor`."""
        prof = CouplingProfile(self.coupling.kind, self.coupling.radius,
                               self.coupling.amplitudes * factor)
        return ModelConfig(self.d, self.masses, self.V, prof, self.L, self.M, self.dt)


@dataclasses.dataclass
class SystemState:
    """Y = (psi, q, p): field set plus particle position/momentum."""

    psi: np.ndarray   # (N, s) + grid, complex
    q: np.ndarray     # (d,)
    p: np.ndarray     # (d,)

    @classmethod
    def zero(cls, cfg):
        return cls(psi=np.zeros((cfg.N, cfg.s) + cfg.grid.shape, dtype=complex),
                   q=np.zeros(cfg.d), p=np.zeros(cfg.d))


@dataclasses.dataclass
class Observable:
    """Z = (chi, u, v); the pairing is <Y,Z> = <psi,chi> + q.u + p.v."""

    chi: np.ndarray   # (N, s) + grid, complex
    u: np.ndarray     # (d,)
    v: np.ndarray     # (d,)

    @classmethod
    def field_only(cls, cfg, chi):
        return cls(chi=chi, u=np.zeros(cfg.d), v=np.zeros(cfg.d))


# -- pairings and norms -----------------------------------------------------


def real_pairing(grid, psi, chi):
    """<psi, chi> = sum_n (R psi_n, R chi_n), grid Riemann sum.

    Equals the real part of the complex L2 inner product; accepts single
    fields or stacked field sets of matching shape.
    """
    if psi.shape != chi.shape:
        raise ValueError(f"shape mismatch {psi.shape} vs {chi.shape}")
    return grid.cell * float(np.sum(psi.real * chi.real + psi.imag * chi.imag))


def real_pairing_k(grid, psi_hat, chi_hat):
    """Same pairing evaluated from Fourier coefficients (Parseval)."""
    if psi_hat.shape != chi_hat.shape:
        raise ValueError(f"shape mismatch {psi_hat.shape} vs {chi_hat.shape}")
    return float(np.sum((np.conj(psi_hat) * chi_hat).real)) / grid.volume


def observable_pairing(grid, Y, Z):
    out = 0.0 if Z.chi is None else real_pairing(grid, Y.psi, Z.chi)
    if Z.u is not None:
        out += float(Y.q @ Z.u)
    if Z.v is not None:
        out += float(Y.p @ Z.v)
    return out


def field_norm(grid, psi):
    return float(np.sqrt(grid.cell * np.sum(np.abs(psi) ** 2)))


def local_seminorm(grid, Y, R):
    """||Y||_{E,R}: field L2 over |x|<R plus |q|^2 + |p|^2, square-rooted."""
    if R > grid.L / 2:
        raise ValueError("R exceeds half the box")
    mask = grid.r2 < R**2
    fld = grid.cell * float(np.sum(np.abs(Y.psi[..., mask]) ** 2))
    return float(np.sqrt(fld + Y.q @ Y.q + Y.p @ Y.p))


def weighted_norm(grid, psi, sigma):
    """|| <x>^sigma psi || with <x> = sqrt(1+|x|^2)."""
    w = (1.0 + grid.r2) ** sigma
    return float(np.sqrt(grid.cell * np.sum(w * np.abs(psi) ** 2)))


def weighted_state_norm(grid, Y, sigma):
    f2 = grid.cell * float(np.sum((1.0 + grid.r2) ** sigma * np.abs(Y.psi) ** 2))
    return float(np.sqrt(f2 + Y.q @ Y.q + Y.p @ Y.p))
