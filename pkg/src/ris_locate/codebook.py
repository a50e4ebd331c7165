"""RIS phase-profile sets: DFT, partial DFT, quantized and directive subsets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import AoaPair, RisDescriptor, element_positions, steering_vector

KINDS = ("full_dft", "partial_dft", "directive", "custom")


@dataclass(frozen=True, eq=False)
class Codebook:
    """An ``L x T`` matrix whose columns are the phase profiles applied per slot.

    ``bits`` is ``None`` for continuous phases.
    """

    profiles: np.ndarray
    bits: int | None = None
    kind: str = "custom"

    def __post_init__(self):
        u = np.array(self.profiles, dtype=complex)
        if u.ndim != 2 or u.shape[1] < 1 or u.shape[0] < 1:
            raise ValueError("profiles must be a nonempty L x T matrix")
        if self.kind not in KINDS:
            raise ValueError(f"unknown codebook kind {self.kind!r}")
        if self.bits is not None and int(self.bits) < 1:
            raise ValueError("bits must be >= 1 or None")
        u.setflags(write=False)
        object.__setattr__(self, "profiles", u)

    @property
    def num_elements(self) -> int:
        return self.profiles.shape[0]

    @property
    def num_profiles(self) -> int:
        return self.profiles.shape[1]

    def to_csv(self, path) -> None:
        """Write ``(column, row, phase)`` triples, zero-based indices, phase in [0, 2 pi)."""
        phases = np.mod(np.angle(self.profiles), 2 * np.pi)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["column", "row", "phase"])
            for t in range(self.num_profiles):
                for ell in range(self.num_elements):
                    w.writerow([t, ell, repr(float(phases[ell, t]))])

    @classmethod
    def from_csv(cls, path, bits: int | None = None, kind: str = "custom") -> "Codebook":
        """Read a codebook written by :meth:`to_csv`; magnitudes are restored as ``1/sqrt(L)``."""
        rows = []
        with open(Path(path), newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append((int(rec["column"]), int(rec["row"]), float(rec["phase"])))
        if not rows:
            raise ValueError(f"{path}: empty codebook file")
        T = max(r[0] for r in rows) + 1
        L = max(r[1] for r in rows) + 1
        phases = np.full((L, T), np.nan)
        for t, ell, ph in rows:
            phases[ell, t] = ph
        if np.isnan(phases).any():
            raise ValueError(f"{path}: missing (column, row) entries")
        return cls(np.exp(1j * phases) / np.sqrt(L), bits=bits, kind=kind)


def dft_matrix(L: int) -> np.ndarray:
    idx = np.arange(L)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / L) / np.sqrt(L)


def dft_codebook(L: int, T: int | None = None, columns=None, rng=None) -> Codebook:
    """DFT profiles ``exp(-j 2 pi l t / L) / sqrt(L)``.

    With ``T == L`` the result is the full unitary DFT. For ``T < L`` the first
    ``T`` columns are used unless explicit ``columns`` are given, or a generator
    ``rng`` is passed, in which case ``T`` distinct columns are drawn at random.
    """
    L = int(L)
    if L < 1:
        raise ValueError("L must be positive")
    if columns is not None:
        cols = np.asarray(columns, dtype=int)
        if T is not None and len(cols) != T:
            raise ValueError("len(columns) must equal T")
        T = len(cols)
    T = L if T is None else int(T)
    if T < 1 or T > L:
        raise ValueError(f"need 1 <= T <= L, got T={T}, L={L}")
    if columns is None:
        cols = np.sort(rng.choice(L, size=T, replace=False)) if rng is not None else np.arange(T)
    if np.any(cols < 0) or np.any(cols >= L) or len(set(cols.tolist())) != len(cols):
        raise ValueError("columns must be distinct indices in [0, L)")
    kind = "full_dft" if T == L and columns is None and rng is None else "partial_dft"
    return Codebook(dft_matrix(L)[:, cols], bits=None, kind=kind)


def quantize_phase(phase, bits: int) -> np.ndarray:
    """Round phases to the nearest point of ``{2^(1-b) pi f}`` on the circle.

    Exact ties go to the smaller grid index ``f``.
    """
    if int(bits) < 1:
        raise ValueError("bits must be >= 1")
    n = 2 ** int(bits)
    step = 2 * np.pi / n
    pos = np.mod(np.asarray(phase, dtype=float), 2 * np.pi) / step
    lo = np.floor(pos)
    frac = pos - lo
    lo = np.mod(lo, n)
    hi = np.mod(lo + 1, n)
    f = np.where(frac < 0.5, lo, np.where(frac > 0.5, hi, np.minimum(lo, hi)))
    return f * step


def quantize(codebook: Codebook, bits: int) -> Codebook:
    """Snap every entry's phase onto the ``b``-bit grid, keeping magnitudes."""
    u = codebook.profiles
    q = np.abs(u) * np.exp(1j * quantize_phase(np.angle(u), bits))
    return Codebook(q, bits=int(bits), kind=codebook.kind)


def directive_subset(ris: RisDescriptor, T: int, pointing: AoaPair, uncertainty: float,
                     rng=None) -> Codebook:
    """The ``T`` DFT columns with the largest gain toward a perturbed pointing direction.

    The center direction is drawn uniformly within ``+-uncertainty/2`` of
    ``pointing`` in azimuth and elevation independently.
    """
    L = ris.num_elements
    if T < 1 or T > L:
        raise ValueError(f"need 1 <= T <= L, got T={T}, L={L}")
    if uncertainty < 0:
        raise ValueError("uncertainty must be >= 0")
    if uncertainty > 0:
        if rng is None:
            raise ValueError("a random generator is required when uncertainty > 0")
        d_az, d_el = rng.uniform(-uncertainty / 2, uncertainty / 2, size=2)
        center = AoaPair(pointing.azimuth + d_az, pointing.elevation + d_el)
    else:
        center = pointing
    U = dft_matrix(L)
    a = steering_vector(element_positions(ris), center, ris.wavelength)
    gain = np.abs(U.T @ np.conj(a))
    # stable sort keeps the lowest index first on ties
    order = np.argsort(-gain, kind="stable")[:T]
    return Codebook(U[:, np.sort(order)], bits=None, kind="directive")
