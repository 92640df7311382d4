"""Command-line front end.

Exit codes: 0 success, 2 bad configuration or input, 3 convergence
failure, 4 numerical-integrity failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .errors import (ConvergenceError, FcidumpParseError,
                     IllConditionedBasisError, NumericalIntegrityError,
                     ResourceLimitError)
from .molint import (chain_geometry, read_geometry_file, load_basis,
                     build_basis_for_geometry, build_ao_integrals)
from .scf import rhf_solve, mo_transform, mo_transform_spatial
from .fock import SectorBasis, sector_hamiltonian
from .spectra import exact_diag, cas_ed, cas_basis
from .cc import cc_solve
from .flow import (FlowConfig, qflow_run, qflow_from_fcidump,
                   enumerate_active_spaces)
from .fcidump import fcidump_write
from . import workbench

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_NUMERICAL = 4


def _add_geometry_args(p):
    p.add_argument("--chain", nargs=2, metavar=("N", "SPACING"),
                   help="linear H chain: atom count and spacing in bohr")
    p.add_argument("--geometry", metavar="FILE",
                   help="geometry file with 'Z x y z' lines (bohr)")
    p.add_argument("--basis", metavar="FILE",
                   help="basis set file (default: built-in STO-3G)")
    p.add_argument("--n-electrons", type=int, default=None,
                   help="electron count (default: neutral)")


def _add_output_arg(p):
    p.add_argument("-o", "--output", metavar="DIR", default=None,
                   help="directory for trace/summary files")


def _add_flow_args(p):
    p.add_argument("--step", choices=("precond", "sd"), default="precond")
    p.add_argument("--alpha", type=float, default=0.1,
                   help="step size for --step sd")
    p.add_argument("--shift", type=float, default=0.1,
                   help="denominator shift for --step precond")
    p.add_argument("--g-tol", type=float, default=1e-6)
    p.add_argument("--e-tol", type=float, default=1e-8)
    p.add_argument("--max-cycles", type=int, default=500)
    p.add_argument("--trotter", type=int, default=1, metavar="N",
                   help="Trotter order of the dressing")
    p.add_argument("--sweep", choices=("gauss_seidel", "jacobi"),
                   default="gauss_seidel")
    p.add_argument("--exact-heff", action="store_true",
                   help="build the full dressed matrix every step")
    p.add_argument("--occ-active", type=int, default=2)
    p.add_argument("--virt-active", type=int, default=2)


def _flow_config(args) -> FlowConfig:
    return FlowConfig(
        n_occ_active=args.occ_active, n_virt_active=args.virt_active,
        step=args.step, alpha=args.alpha, shift=args.shift,
        g_tol=args.g_tol, e_tol=args.e_tol, max_cycles=args.max_cycles,
        trotter_order=args.trotter, sweep=args.sweep,
        exact_heff=args.exact_heff)


def _geometry(args):
    if args.chain and args.geometry:
        raise ValueError("give either --chain or --geometry, not both")
    if args.chain:
        return chain_geometry(int(args.chain[0]), float(args.chain[1]))
    if args.geometry:
        return read_geometry_file(args.geometry)
    raise ValueError("a geometry is required (--chain or --geometry)")


def _integrals(args):
    g = _geometry(args)
    shells = (build_basis_for_geometry(g, load_basis(args.basis))
              if args.basis else None)
    return g, build_ao_integrals(g, shells)


def _electrons(args, g):
    if args.n_electrons is not None:
        return args.n_electrons
    return sum(z for z, _ in g.atoms)


def _scf(args):
    g, ao = _integrals(args)
    return g, ao, rhf_solve(ao, _electrons(args, g))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _ensure_dir(path):
    if path:
        os.makedirs(path, exist_ok=True)


# --- subcommand handlers ----------------------------------------------------

def cmd_integrals(args):
    g, ao = _integrals(args)
    print(f"n_ao           {ao.n_ao}")
    print(f"e_nuc          {ao.e_nuc:.10f}")
    print(f"overlap cond   {np.linalg.cond(ao.overlap):.3e}")
    if args.output:
        _ensure_dir(args.output)
        path = os.path.join(args.output, "ao_integrals.npz")
        np.savez(path, overlap=ao.overlap, kinetic=ao.kinetic,
                 nuclear=ao.nuclear, eri=ao.eri, e_nuc=ao.e_nuc)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_scf(args):
    g, ao, scf = _scf(args)
    print(f"E_HF           {scf.e_hf:.10f}")
    print("orbital energies: "
          + " ".join(f"{e:.6f}" for e in scf.orbital_energies))
    if args.output:
        _ensure_dir(args.output)
        path = os.path.join(args.output, "scf_trace.csv")
        _write_csv(path, ["cycle", "energy", "density_rms"], scf.iterations)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_ed(args):
    g, ao, scf = _scf(args)
    h = mo_transform(ao, scf)
    basis = SectorBasis.for_reference(h.n_spatial, h.n_electrons)
    e0, _ = exact_diag(h, basis)
    print(f"E_ED           {e0:.10f}")
    print(f"sector dim     {basis.size}")
    return EXIT_OK


def cmd_cased(args):
    g, ao, scf = _scf(args)
    h = mo_transform(ao, scf)
    spaces = enumerate_active_spaces(scf, h.n_electrons // 2,
                                     args.occ_active, args.virt_active)
    primary = spaces[0]
    cas = cas_basis(h.n_spatial, h.n_electrons,
                    primary.occupied_active, primary.virtual_active)
    e0, _ = cas_ed(h, cas)
    print(f"E_CAS-ED       {e0:.10f}")
    print(f"active space   occ={primary.occupied_active} "
          f"virt={primary.virtual_active}")
    print(f"CAS dim        {cas.size}")
    return EXIT_OK


def cmd_cc(args):
    g, ao, scf = _scf(args)
    h = mo_transform(ao, scf)
    label = {2: "CCSD", 3: "CCSDT", 4: "CCSDTQ"}.get(args.rank,
                                                     f"CC(rank {args.rank})")
    e, op, trace = cc_solve(h, args.rank, level_shift=args.level_shift)
    print(f"E_{label:<12} {e:.10f}")
    print(f"iterations     {len(trace)}")
    if args.output:
        _ensure_dir(args.output)
        path = os.path.join(args.output, f"cc_rank{args.rank}_trace.csv")
        _write_csv(path, ["iteration", "energy", "residual_norm"], trace)
        print(f"wrote {path}")
    return EXIT_OK


def _report_flow(rep, outdir):
    print(f"E_QFlow        {rep.e_primary:.10f}")
    print(f"converged      {rep.converged} ({rep.cycles} cycles)")
    print(f"pool size      {rep.pool.size} over {len(rep.spaces)} spaces")
    print(f"energy spread  {rep.spread * 1e3:.3f} mHartree "
          f"[{rep.e_min:.6f}, {rep.e_max:.6f}]")
    if outdir:
        _ensure_dir(outdir)
        rows = [(c + 1, i, float(e))
                for c, cycle in enumerate(rep.trace)
                for i, e in enumerate(cycle)]
        _write_csv(os.path.join(outdir, "flow_trace.csv"),
                   ["cycle", "space_ordinal", "energy_hartree"], rows)
        rep.pool.dump(os.path.join(outdir, "pool.txt"))
        with open(os.path.join(outdir, "flow_summary.json"), "w") as fh:
            json.dump(rep.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote flow_trace.csv, pool.txt, flow_summary.json in {outdir}")
    return EXIT_OK if rep.converged else EXIT_CONVERGENCE


def cmd_qflow(args):
    g, ao, scf = _scf(args)
    h = mo_transform(ao, scf)
    rep = qflow_run(h, scf=scf, config=_flow_config(args))
    return _report_flow(rep, args.output)


def cmd_fcidump_export(args):
    g, ao, scf = _scf(args)
    sp = mo_transform_spatial(ao, scf)
    fcidump_write(sp, args.file)
    print(f"wrote {args.file} ({sp.n_orb} orbitals, "
          f"{sp.n_electrons} electrons)")
    return EXIT_OK


def cmd_qflow_fcidump(args):
    rep = qflow_from_fcidump(args.file, config=_flow_config(args))
    return _report_flow(rep, args.output)


def cmd_report(args):
    cfg = workbench.load_run_config(args.config)
    if args.methods:
        cfg.methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        cfg.__post_init__()
    if args.output:
        cfg.output_dir = args.output
    code, _ = workbench.run(cfg)
    return code


def build_parser():
    ap = argparse.ArgumentParser(
        prog="qflowsim",
        description="Classical workbench for coupled active-space "
                    "variational flows on hydrogen chains.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrals", help="assemble AO integrals")
    _add_geometry_args(p)
    _add_output_arg(p)
    p.set_defaults(func=cmd_integrals)

    p = sub.add_parser("scf", help="restricted Hartree-Fock")
    _add_geometry_args(p)
    _add_output_arg(p)
    p.set_defaults(func=cmd_scf)

    p = sub.add_parser("ed", help="exact diagonalization (full sector)")
    _add_geometry_args(p)
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("cased", help="CAS-ED in the primary active space")
    _add_geometry_args(p)
    p.add_argument("--occ-active", type=int, default=2)
    p.add_argument("--virt-active", type=int, default=2)
    p.set_defaults(func=cmd_cased)

    p = sub.add_parser("cc", help="rank-truncated coupled cluster")
    _add_geometry_args(p)
    _add_output_arg(p)
    p.add_argument("--rank", type=int, required=True,
                   help="truncation rank (2 = CCSD, 3 = CCSDT, 4 = CCSDTQ)")
    p.add_argument("--level-shift", type=float, default=0.0)
    p.set_defaults(func=cmd_cc)

    p = sub.add_parser("qflow", help="coupled active-space variational flow")
    _add_geometry_args(p)
    _add_output_arg(p)
    _add_flow_args(p)
    p.set_defaults(func=cmd_qflow)

    p = sub.add_parser("fcidump-export",
                       help="write the MO Hamiltonian as an FCIDUMP file")
    _add_geometry_args(p)
    p.add_argument("file", help="output FCIDUMP path")
    p.set_defaults(func=cmd_fcidump_export)

    p = sub.add_parser("qflow-fcidump",
                       help="run the flow on an FCIDUMP Hamiltonian")
    p.add_argument("file", help="input FCIDUMP path")
    _add_output_arg(p)
    _add_flow_args(p)
    p.set_defaults(func=cmd_qflow_fcidump)

    p = sub.add_parser("report",
                       help="config-driven multi-method benchmark table")
    p.add_argument("--config", required=True, metavar="FILE",
                   help="sectioned key = value run configuration")
    p.add_argument("--methods", default=None,
                   help="comma-separated override of [methods] run")
    p.add_argument("-o", "--output", metavar="DIR", default=None,
                   help="override [output] directory")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, FcidumpParseError, ResourceLimitError,
            NotImplementedError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as ex:
        print(f"convergence failure: {ex}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (NumericalIntegrityError, IllConditionedBasisError) as ex:
        print(f"numerical integrity failure: {ex}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
