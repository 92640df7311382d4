"""Config-driven pipelines: geometry -> integrals -> SCF -> methods.

RunConfig is parsed from a sectioned key = value file (INI syntax); every
field has a CLI flag override in qflowsim.cli. All runs are fully
deterministic, so repeated runs produce byte-identical reports.
"""

import configparser
import csv
import json
import os
from dataclasses import dataclass, field

from .errors import ConvergenceError
from .molint import (chain_geometry, read_geometry_file, load_basis,
                     build_basis_for_geometry, build_ao_integrals)
from .scf import rhf_solve, mo_transform
from .fock import SectorBasis, sector_hamiltonian
from .spectra import exact_diag, cas_ed, cas_basis
from .cc import cc_solve
from .flow import FlowConfig, qflow_run, enumerate_active_spaces

__all__ = ["RunConfig", "load_run_config", "run", "table_report", "METHODS"]

METHODS = ("hf", "cas_ed", "ccsd", "ccsdt", "ccsdtq", "qflow", "ed")
METHOD_LABELS = {
    "hf": "HF", "cas_ed": "CAS-ED", "ccsd": "CCSD", "ccsdt": "CCSDT",
    "ccsdtq": "CCSDTQ", "qflow": "QFlow(4e,4o)", "ed": "ED",
}
_CC_RANK = {"ccsd": 2, "ccsdt": 3, "ccsdtq": 4}


@dataclass
class RunConfig:
    """One benchmark run: systems, method list, and solver knobs."""

    systems: list = field(default_factory=list)  # (label, Geometry) pairs
    basis_file: str = None
    n_electrons: int = None          # default: neutral molecule
    methods: list = field(default_factory=list)
    n_occ_active: int = 2
    n_virt_active: int = 2
    flow: FlowConfig = field(default_factory=FlowConfig)
    cc_level_shift: float = 0.0
    output_dir: str = None
    write_traces: bool = True

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(
                    f"unknown method {m!r}; choose from {', '.join(METHODS)}")


def _parse_chain(text):
    parts = text.split()
    if len(parts) != 2:
        raise ValueError(f"chain spec must be 'n spacing', got {text!r}")
    n, spacing = int(parts[0]), float(parts[1])
    return (f"H{n} ({spacing:g} a.u.)", chain_geometry(n, spacing))


def load_run_config(path) -> RunConfig:
    """Parse a sectioned key = value config file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not cp.read(path):
        raise ValueError(f"cannot read config file {path}")
    cfg = RunConfig()

    if cp.has_section("geometry"):
        geo = cp["geometry"]
        if "chain" in geo:
            cfg.systems.append(_parse_chain(geo["chain"]))
        if "chains" in geo:
            for spec in geo["chains"].split(";"):
                spec = spec.strip()
                if spec:
                    cfg.systems.append(_parse_chain(spec))
        if "file" in geo:
            cfg.systems.append((os.path.basename(geo["file"]),
                                read_geometry_file(geo["file"])))
        if "n_electrons" in geo:
            cfg.n_electrons = geo.getint("n_electrons")
    if cp.has_section("basis") and "file" in cp["basis"]:
        cfg.basis_file = cp["basis"]["file"]
    if cp.has_section("methods") and "run" in cp["methods"]:
        cfg.methods = [m.strip() for m in cp["methods"]["run"].split(",")
                       if m.strip()]
    if cp.has_section("cas"):
        cfg.n_occ_active = cp["cas"].getint("n_occ_active", 2)
        cfg.n_virt_active = cp["cas"].getint("n_virt_active", 2)
    if cp.has_section("qflow"):
        qf = cp["qflow"]
        cfg.flow = FlowConfig(
            n_occ_active=cfg.n_occ_active,
            n_virt_active=cfg.n_virt_active,
            step=qf.get("step", "precond"),
            alpha=qf.getfloat("alpha", 0.1),
            shift=qf.getfloat("shift", 0.1),
            g_tol=qf.getfloat("g_tol", 1e-6),
            e_tol=qf.getfloat("e_tol", 1e-8),
            max_cycles=qf.getint("max_cycles", 500),
            trotter_order=qf.getint("trotter_order", 1),
            sweep=qf.get("sweep", "gauss_seidel"),
            exact_heff=qf.getboolean("exact_heff", False))
    if cp.has_section("cc"):
        cfg.cc_level_shift = cp["cc"].getfloat("level_shift", 0.0)
    if cp.has_section("output"):
        cfg.output_dir = cp["output"].get("directory", None)
    cfg.__post_init__()
    return cfg


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _run_system(label, geometry, cfg: RunConfig, outdir=None):
    """All requested methods for one geometry; returns
    ({method: energy or None}, {method: error message})."""
    shells = None
    if cfg.basis_file:
        shells = build_basis_for_geometry(geometry, load_basis(cfg.basis_file))
    ao = build_ao_integrals(geometry, shells)
    n_electrons = (cfg.n_electrons if cfg.n_electrons is not None
                   else sum(z for z, _ in geometry.atoms))

    energies, errors = {}, {}
    scf = rhf_solve(ao, n_electrons)
    if "hf" in cfg.methods:
        energies["hf"] = scf.e_hf
        if outdir:
            _write_csv(os.path.join(outdir, f"{_slug(label)}_scf_trace.csv"),
                       ["cycle", "energy", "density_rms"], scf.iterations)
    need_h = set(cfg.methods) - {"hf"}
    if not need_h:
        return energies, errors
    h = mo_transform(ao, scf)
    basis = SectorBasis.for_reference(h.n_spatial, n_electrons)
    h_mat = sector_hamiltonian(h, basis)

    if "ed" in cfg.methods:
        # reuse the assembled sector matrix via the basis-level cache
        e0, _ = exact_diag(h, basis)
        energies["ed"] = e0
    if "cas_ed" in cfg.methods:
        n_occ = n_electrons // 2
        spaces = enumerate_active_spaces(scf, n_occ, cfg.n_occ_active,
                                         cfg.n_virt_active)
        primary = spaces[0]
        cas = cas_basis(h.n_spatial, n_electrons, primary.occupied_active,
                        primary.virtual_active)
        e0, _ = cas_ed(h, cas)
        energies["cas_ed"] = e0
    for m, rank in _CC_RANK.items():
        if m not in cfg.methods:
            continue
        try:
            e, op, trace = cc_solve(h, rank, level_shift=cfg.cc_level_shift,
                                    basis=basis, h_mat=h_mat)
            energies[m] = e
            if outdir:
                _write_csv(os.path.join(outdir, f"{_slug(label)}_{m}_trace.csv"),
                           ["iteration", "energy", "residual_norm"], trace)
        except ConvergenceError as ex:
            errors[m] = str(ex)
            energies[m] = None
    if "qflow" in cfg.methods:
        rep = qflow_run(h, scf=scf, config=cfg.flow)
        energies["qflow"] = rep.e_primary
        if not rep.converged:
            errors["qflow"] = f"flow not converged in {rep.cycles} cycles"
        if outdir:
            slug = _slug(label)
            rows = [(c + 1, i, float(e))
                    for c, cycle in enumerate(rep.trace)
                    for i, e in enumerate(cycle)]
            _write_csv(os.path.join(outdir, f"{slug}_flow_trace.csv"),
                       ["cycle", "space_ordinal", "energy_hartree"], rows)
            rep.pool.dump(os.path.join(outdir, f"{slug}_pool.txt"))
            with open(os.path.join(outdir, f"{slug}_flow_summary.json"),
                      "w") as fh:
                json.dump(rep.summary(), fh, indent=2, sort_keys=True)
                fh.write("\n")
    return energies, errors


def _slug(label):
    return "".join(c if c.isalnum() else "_" for c in label).strip("_")


def table_report(results, order=METHODS):
    """Text table (4 decimals, Hartree) plus a full-precision dict.

    results: {system label: {method: energy or None}}.
    """
    systems = list(results.keys())
    methods = [m for m in order
               if any(m in results[s] for s in systems)]
    width = max([len(METHOD_LABELS[m]) for m in methods] + [6])
    colw = max(max((len(s) for s in systems), default=8), 10)
    lines = [" " * width + "  " + "  ".join(f"{s:>{colw}}" for s in systems)]
    for m in methods:
        cells = []
        for s in systems:
            e = results[s].get(m)
            cells.append(f"{e:>{colw}.4f}" if e is not None
                         else f"{'--':>{colw}}")
        lines.append(f"{METHOD_LABELS[m]:<{width}}  " + "  ".join(cells))
    payload = {s: {m: results[s].get(m) for m in methods} for s in systems}
    return "\n".join(lines), payload


def run(cfg: RunConfig, quiet=False):
    """Execute a full run; returns (exit_code, results dict).

    A convergence failure in one method does not stop the others; it is
    reported and reflected in the exit code (3). Numerical-integrity
    failures exit with 4, config problems with 2.
    """
    if not cfg.methods or not cfg.systems:
        return 0, {}
    outdir = cfg.output_dir
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    results, all_errors = {}, {}
    for label, geometry in cfg.systems:
        energies, errors = _run_system(label, geometry, cfg,
                                       outdir if cfg.write_traces else None)
        results[label] = energies
        all_errors[label] = errors
    text, payload = table_report(results)
    if not quiet:
        print(text)
        for label, errors in all_errors.items():
            for m, msg in errors.items():
                print(f"warning: {label} {METHOD_LABELS[m]}: {msg}")
    if outdir:
        with open(os.path.join(outdir, "summary.json"), "w") as fh:
            json.dump({"energies": payload, "errors": all_errors},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    code = 3 if any(all_errors[s] for s in all_errors) else 0
    return code, results
