"""Geometries, contracted s-type Gaussian basis sets, and AO integrals.

Everything here works in atomic units (bohr / Hartree) and supports s
functions only, which is all a hydrogen chain in a minimal basis needs.
The closed forms are the textbook ones for products of s Gaussians; the
nuclear-attraction and repulsion kernels reduce to the zeroth Boys
function F0.
"""

from dataclasses import dataclass, field
import math
import importlib.resources

import numpy as np

from .errors import IllConditionedBasisError

__all__ = [
    "Geometry", "ContractedSGaussian", "AOIntegralSet",
    "chain_geometry", "nuclear_repulsion", "boys_f0",
    "load_basis", "default_basis_path", "build_basis_for_geometry",
    "build_ao_integrals", "read_geometry_file",
]


@dataclass(frozen=True)
class Geometry:
    """A set of point nuclei: list of (charge Z, position in bohr)."""

    atoms: tuple

    def __post_init__(self):
        pos = [np.asarray(p, dtype=float) for _, p in self.atoms]
        for z, _ in self.atoms:
            if z < 1:
                raise ValueError(f"nuclear charge must be >= 1, got {z}")
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.allclose(pos[i], pos[j], atol=1e-12):
                    raise ValueError(f"atoms {i} and {j} coincide")
        object.__setattr__(
            self, "atoms",
            tuple((int(z), tuple(float(x) for x in p)) for z, p in self.atoms))

    @property
    def n_atoms(self):
        return len(self.atoms)

    def position(self, i):
        return np.array(self.atoms[i][1])


def chain_geometry(n_atoms: int, spacing: float) -> Geometry:
    """Equally spaced collinear hydrogen atoms along z, first at the origin."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    return Geometry(tuple((1, (0.0, 0.0, k * spacing)) for k in range(n_atoms)))


def read_geometry_file(path) -> Geometry:
    """Read 'Z x y z' lines (bohr); blank lines and '#' comments ignored."""
    atoms = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'Z x y z'")
            atoms.append((int(parts[0]), tuple(float(x) for x in parts[1:])))
    if not atoms:
        raise ValueError(f"{path}: no atoms")
    return Geometry(tuple(atoms))


def nuclear_repulsion(g: Geometry) -> float:
    """Sum of Z_i Z_j / r_ij over unique pairs, in Hartree."""
    e = 0.0
    for i in range(g.n_atoms):
        zi, ri = g.atoms[i][0], g.position(i)
        for j in range(i + 1, g.n_atoms):
            zj, rj = g.atoms[j][0], g.position(j)
            r = float(np.linalg.norm(ri - rj))
            if r < 1e-12:
                raise ZeroDivisionError(f"atoms {i} and {j} coincide")
            e += zi * zj / r
    return e


@dataclass(frozen=True)
class ContractedSGaussian:
    """Normalized contracted s-type Gaussian on one atomic center.

    primitives holds (exponent, contraction coefficient) pairs; the
    coefficients stored here are rescaled so that the contracted
    function has unit self-overlap.
    """

    center: int
    primitives: tuple

    def __post_init__(self):
        if len(self.primitives) < 1:
            raise ValueError("need at least one primitive")
        prims = []
        for alpha, c in self.primitives:
            if alpha <= 0:
                raise ValueError(f"exponent must be positive, got {alpha}")
            # fold the primitive normalization (2a/pi)^(3/4) into c
            prims.append((float(alpha), float(c) * (2.0 * alpha / math.pi) ** 0.75))
        # renormalize the contraction
        s = 0.0
        for a, ca in prims:
            for b, cb in prims:
                s += ca * cb * (math.pi / (a + b)) ** 1.5
        scale = 1.0 / math.sqrt(s)
        object.__setattr__(
            self, "primitives", tuple((a, c * scale) for a, c in prims))


def load_basis(path) -> dict:
    """Parse a basis file into {element symbol: [(exponent, coeff), ...]}.

    Format: one block per element, header 'symbol n_primitives', then
    n lines of 'exponent coefficient'.
    """
    table = {}
    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 2:
            raise ValueError(f"bad basis block header: {lines[i]!r}")
        symbol, n = parts[0], int(parts[1])
        prims = []
        for k in range(n):
            a, c = lines[i + 1 + k].split()
            prims.append((float(a), float(c)))
        table[symbol] = prims
        i += 1 + n
    return table


_SYMBOLS = {1: "H"}


def default_basis_path():
    return importlib.resources.files("qflowsim.data") / "sto-3g.basis"


def build_basis_for_geometry(g: Geometry, basis_table=None):
    """One contracted s function per atom, looked up by element symbol."""
    if basis_table is None:
        basis_table = load_basis(default_basis_path())
    shells = []
    for i, (z, _) in enumerate(g.atoms):
        sym = _SYMBOLS.get(z)
        if sym is None or sym not in basis_table:
            raise NotImplementedError(f"no basis for element Z={z}")
        shells.append(ContractedSGaussian(i, tuple(basis_table[sym])))
    return shells


# --- primitive integral kernels -------------------------------------------

_BOYS_SWITCH = 12.0


def boys_f0(t: float) -> float:
    """F0(t) = int_0^1 exp(-t u^2) du.

    Power series below t=12, erf closed form above; both branches are
    accurate to ~1e-13 absolute.
    """
    if t < 0:
        raise ValueError("boys_f0 requires t >= 0")
    if t < _BOYS_SWITCH:
        # F0(t) = sum_k (-t)^k / (k! (2k+1))
        term = 1.0
        total = 1.0
        k = 0
        while abs(term) > 1e-17:
            k += 1
            term *= -t / k
            total += term / (2 * k + 1)
        return total
    return 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))


def _gaussian_product(a, ra, b, rb):
    p = a + b
    mu = a * b / p
    rab2 = float(np.dot(ra - rb, ra - rb))
    k = math.exp(-mu * rab2)
    rp = (a * ra + b * rb) / p
    return p, k, rp


def primitive_overlap(a, ra, b, rb):
    p, k, _ = _gaussian_product(a, np.asarray(ra, float), b, np.asarray(rb, float))
    return k * (math.pi / p) ** 1.5


def primitive_kinetic(a, ra, b, rb):
    ra = np.asarray(ra, float)
    rb = np.asarray(rb, float)
    p, k, _ = _gaussian_product(a, ra, b, rb)
    mu = a * b / p
    rab2 = float(np.dot(ra - rb, ra - rb))
    return mu * (3.0 - 2.0 * mu * rab2) * k * (math.pi / p) ** 1.5


def primitive_nuclear(a, ra, b, rb, rc):
    """Attraction integral (a|1/|r-C||b) without the -Z factor."""
    ra = np.asarray(ra, float)
    rb = np.asarray(rb, float)
    rc = np.asarray(rc, float)
    p, k, rp = _gaussian_product(a, ra, b, rb)
    rpc2 = float(np.dot(rp - rc, rp - rc))
    return 2.0 * math.pi / p * k * boys_f0(p * rpc2)


def primitive_eri(a, ra, b, rb, c, rc, d, rd):
    """Chemist-ordered (ab|cd) for s primitives."""
    ra, rb = np.asarray(ra, float), np.asarray(rb, float)
    rc, rd = np.asarray(rc, float), np.asarray(rd, float)
    p, kab, rp = _gaussian_product(a, ra, b, rb)
    q, kcd, rq = _gaussian_product(c, rc, d, rd)
    rpq2 = float(np.dot(rp - rq, rp - rq))
    pref = 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
    return pref * kab * kcd * boys_f0(p * q / (p + q) * rpq2)


# --- contracted integral assembly -----------------------------------------

@dataclass
class AOIntegralSet:
    """AO-basis matrices: overlap, kinetic, nuclear attraction, ERI, e_nuc.

    eri is stored chemist-ordered, (pq|rs), with the full 8-fold
    permutational symmetry holding by construction.
    """

    n_ao: int
    overlap: np.ndarray
    kinetic: np.ndarray
    nuclear: np.ndarray
    eri: np.ndarray
    e_nuc: float

    @property
    def core(self):
        return self.kinetic + self.nuclear


def build_ao_integrals(g: Geometry, shells=None) -> AOIntegralSet:
    """Assemble all AO integrals for a geometry and list of s shells."""
    if shells is None:
        shells = build_basis_for_geometry(g)
    n = len(shells)
    centers = [g.position(sh.center) for sh in shells]

    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            sij = tij = vij = 0.0
            for a, ca in shells[i].primitives:
                for b, cb in shells[j].primitives:
                    w = ca * cb
                    sij += w * primitive_overlap(a, centers[i], b, centers[j])
                    tij += w * primitive_kinetic(a, centers[i], b, centers[j])
                    for z, pos in g.atoms:
                        vij -= w * z * primitive_nuclear(
                            a, centers[i], b, centers[j], np.asarray(pos))
            s[i, j] = s[j, i] = sij
            t[i, j] = t[j, i] = tij
            v[i, j] = v[j, i] = vij

    eri = np.zeros((n, n, n, n))
    # unique quartets under the 8-fold symmetry; shared storage makes the
    # symmetry exact
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if (i * (i + 1) // 2 + j) < (k * (k + 1) // 2 + l):
                        continue
                    val = 0.0
                    for a, ca in shells[i].primitives:
                        for b, cb in shells[j].primitives:
                            for c, cc in shells[k].primitives:
                                for d, cd in shells[l].primitives:
                                    val += ca * cb * cc * cd * primitive_eri(
                                        a, centers[i], b, centers[j],
                                        c, centers[k], d, centers[l])
                    for p, q, r, u in ((i, j, k, l), (j, i, k, l),
                                       (i, j, l, k), (j, i, l, k),
                                       (k, l, i, j), (l, k, i, j),
                                       (k, l, j, i), (l, k, j, i)):
                        eri[p, q, r, u] = val

    smin = float(np.linalg.eigvalsh(s)[0])
    if smin < 1e-10:
        raise IllConditionedBasisError(
            f"overlap matrix nearly singular (lowest eigenvalue {smin:.3e})")
    return AOIntegralSet(n, s, t, v, eri, nuclear_repulsion(g))
