"""Command-line surface: input parsing, pipeline orchestration, reports.

The input is a single keyed text file with bracketed sections:

    [molecule]              optional; dimensionality = 1 | 2 | 3
    [atoms]                 label mass x y z          (one atom per line)
    [internal_coordinates]  stretch i j | bend i j k | torsion i j k l
                            | cart i x|y|z | lincomb w1 ... wN
                            (atom indices are 1-based)
    [force_constants]       dense lower-triangle rows, or full square rows
    [rotor]                 a = .., b = .., c = ..    (cm^-1, optional)
    [dynamics]              kappa = .., beta = ..     (optional)
                            t_end = 10.0, samples = 201

Outputs: report.json (always), modes.xyz, levels.txt, trajectory.csv as
requested by the task list.  report.json is byte-deterministic: fixed field
order and %.12e float formatting.  Exit codes: 0 success, 2 validation or
usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from . import dynamics as dyn
from . import molecule as mo
from . import normalmodes as nm
from . import rotor as ro
from . import watson as wa
from .quadform import QuadformError, SymMatrix

TASKS = ("modes", "dynamics", "rotor", "watson-diagnostics")

# Tolerance defaults applied by the pipeline (documented in one place;
# the per-module constants are the single source of truth).
TOLERANCES = {
    "f_symmetry_reject": 1e-9,   # beyond this, [force_constants] is an error
    "f_symmetry_warn": 1e-12,    # above this, symmetrization warns
    "symmetrize": 1e-12,
    "degeneracy_rtol": 1e-8,
    "rank_rtol": 1e-10,
    "gimbal": 1e-10,
}

_AXES = {"x": 0, "y": 1, "z": 2, "0": 0, "1": 1, "2": 2}


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ValidationError(ValueError):
    pass


class ParsedInput(NamedTuple):
    molecule: mo.Molecule
    internal_coordinates: mo.InternalCoordinateSet
    force_field: nm.ForceField
    rotor_spec: Optional[ro.RotorSpec]
    initial_conditions: Optional[dyn.InitialConditions]
    dynamics_options: dict


@dataclass
class JobSpec:
    input_path: Path
    tasks: tuple = ("modes",)
    output_dir: Path = Path(".")
    unit_mode: str = "cm"
    jmax: int = 5
    frames: int = 20
    amplitude: float = 0.3

    def __post_init__(self):
        self.input_path = Path(self.input_path)
        self.output_dir = Path(self.output_dir)
        tasks = tuple(self.tasks)
        if not tasks:
            raise ValidationError("at least one task is required")
        for t in tasks:
            if t not in TASKS:
                raise ValidationError(
                    f"unknown task {t!r}; choose from {', '.join(TASKS)}"
                )
        self.tasks = tasks


# -- input parsing -------------------------------------------------------------


_SECTIONS = (
    "molecule",
    "atoms",
    "internal_coordinates",
    "force_constants",
    "rotor",
    "dynamics",
)


def _split_sections(text: str):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(lineno, f"malformed section header {raw.strip()!r}")
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ParseError(
                    lineno, f"unknown section [{name}]; expected one of "
                    + ", ".join(_SECTIONS)
                )
            if name in sections:
                raise ParseError(lineno, f"duplicate section [{name}]")
            current = []
            sections[name] = current
            continue
        if current is None:
            raise ParseError(lineno, "content before any [section] header")
        current.append((lineno, line))
    return sections


def _parse_keyed(lines, section: str):
    out = {}
    for lineno, line in lines:
        if "=" not in line:
            raise ParseError(lineno, f"expected key = value in [{section}]")
        key, _, value = line.partition("=")
        out[key.strip().lower()] = (lineno, value.strip())
    return out


def _floats(lineno: int, text: str):
    vals = []
    for tok in text.split():
        try:
            vals.append(float(tok))
        except ValueError:
            raise ParseError(lineno, f"not a number: {tok!r}") from None
    return vals


def _parse_atoms(lines):
    labels, masses, positions = [], [], []
    for lineno, line in lines:
        toks = line.split()
        if len(toks) != 5:
            raise ParseError(lineno, "atom lines are: label mass x y z")
        labels.append(toks[0])
        vals = _floats(lineno, " ".join(toks[1:]))
        if vals[0] <= 0:
            raise ValidationError(f"line {lineno}: mass must be positive")
        masses.append(vals[0])
        positions.append(vals[1:])
    if not labels:
        raise ValidationError("[atoms] section is empty")
    return labels, masses, positions


def _atom_index(lineno: int, token: str, natoms: int) -> int:
    try:
        idx = int(token)
    except ValueError:
        raise ParseError(lineno, f"not an atom index: {token!r}") from None
    if not 1 <= idx <= natoms:
        raise ValidationError(f"line {lineno}: atom index {idx} outside 1..{natoms}")
    return idx - 1


def _parse_internal_coordinates(lines, natoms: int, ncart: int, dim: int):
    coords = []
    for lineno, line in lines:
        toks = line.split()
        kind = toks[0].lower()
        args = toks[1:]
        try:
            if kind == "stretch" and len(args) == 2:
                coords.append(
                    mo.BondStretch(*(_atom_index(lineno, a, natoms) for a in args))
                )
            elif kind == "bend" and len(args) == 3:
                coords.append(
                    mo.AngleBend(*(_atom_index(lineno, a, natoms) for a in args))
                )
            elif kind == "torsion" and len(args) == 4:
                coords.append(
                    mo.Torsion(*(_atom_index(lineno, a, natoms) for a in args))
                )
            elif kind == "cart" and len(args) == 2:
                axis = _AXES.get(args[1].lower())
                if axis is None or axis >= dim:
                    raise ValidationError(
                        f"line {lineno}: axis {args[1]!r} invalid for dimensionality {dim}"
                    )
                coords.append(
                    mo.CartesianDisplacement(
                        atom=_atom_index(lineno, args[0], natoms), axis=axis
                    )
                )
            elif kind == "lincomb":
                weights = _floats(lineno, " ".join(args))
                if len(weights) != ncart:
                    raise ValidationError(
                        f"line {lineno}: lincomb needs {ncart} weights"
                    )
                coords.append(mo.LinearCombination(weights=tuple(weights)))
            else:
                raise ParseError(
                    lineno,
                    f"unknown internal coordinate {line!r} "
                    "(stretch/bend/torsion/cart/lincomb)",
                )
        except mo.MoleculeError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
    if not coords:
        raise ValidationError("[internal_coordinates] section is empty")
    return mo.InternalCoordinateSet(tuple(coords))


def _parse_force_constants(lines, n: int):
    rows = [(lineno, _floats(lineno, line)) for lineno, line in lines]
    if len(rows) != n:
        raise ValidationError(
            f"[force_constants] has {len(rows)} rows for {n} internal coordinates"
        )
    f = np.zeros((n, n))
    lower = all(len(vals) == i + 1 for i, (_, vals) in enumerate(rows))
    full = all(len(vals) == n for _, vals in rows)
    if lower:
        for i, (_, vals) in enumerate(rows):
            f[i, : i + 1] = vals
            f[: i + 1, i] = vals
    elif full:
        for i, (_, vals) in enumerate(rows):
            f[i] = vals
        asym = float(np.abs(f - f.T).max())
        scale = max(float(np.abs(f).max()), 1e-300)
        if asym > TOLERANCES["f_symmetry_reject"] * scale:
            raise ValidationError(
                f"force-constant matrix asymmetric by {asym:.3e}"
            )
        if asym > TOLERANCES["f_symmetry_warn"] * scale:
            print(
                f"warning: symmetrized force constants (asymmetry {asym:.3e})",
                file=sys.stderr,
            )
        f = 0.5 * (f + f.T)
    else:
        raise ParseError(
            rows[0][0], "rows must form a lower triangle or a full square matrix"
        )
    return nm.ForceField(f=SymMatrix(f))


def parse_input(path) -> ParsedInput:
    """Parse and validate an input file into domain objects."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    sections = _split_sections(text)

    for required in ("atoms", "internal_coordinates", "force_constants"):
        if required not in sections:
            raise ValidationError(f"missing [{required}] section")

    dim = 3
    if "molecule" in sections:
        keyed = _parse_keyed(sections["molecule"], "molecule")
        if "dimensionality" in keyed:
            lineno, value = keyed["dimensionality"]
            if value not in ("1", "2", "3"):
                raise ValidationError(f"line {lineno}: dimensionality must be 1, 2 or 3")
            dim = int(value)

    labels, masses, positions = _parse_atoms(sections["atoms"])
    try:
        molecule = mo.Molecule.from_lists(labels, masses, positions, dimensionality=dim)
    except mo.MoleculeError as exc:
        raise ValidationError(str(exc)) from exc

    ics = _parse_internal_coordinates(
        sections["internal_coordinates"], molecule.natoms, molecule.ncart, dim
    )
    force_field = _parse_force_constants(sections["force_constants"], len(ics))

    rotor_spec = None
    if "rotor" in sections:
        keyed = _parse_keyed(sections["rotor"], "rotor")
        consts = {}
        for key in ("a", "b", "c"):
            if key not in keyed:
                raise ValidationError(f"[rotor] section needs {key} =")
            lineno, value = keyed[key]
            consts[key] = _floats(lineno, value)[0]
        try:
            rotor_spec = ro.classify(consts["a"], consts["b"], consts["c"])
        except ro.RotorError as exc:
            raise ValidationError(str(exc)) from exc

    initial = None
    dyn_options = {"t_end": 10.0, "samples": 201}
    if "dynamics" in sections:
        keyed = _parse_keyed(sections["dynamics"], "dynamics")
        for key in ("kappa", "beta"):
            if key not in keyed:
                raise ValidationError(f"[dynamics] section needs {key} =")
        kappa = _floats(*keyed["kappa"])
        beta = _floats(*keyed["beta"])
        if len(kappa) != len(ics) or len(beta) != len(ics):
            raise ValidationError(
                f"kappa/beta must have {len(ics)} entries (one per internal coordinate)"
            )
        initial = dyn.InitialConditions(kappa=np.array(kappa), beta_vel=np.array(beta))
        if "t_end" in keyed:
            dyn_options["t_end"] = _floats(*keyed["t_end"])[0]
        if "samples" in keyed:
            dyn_options["samples"] = int(_floats(*keyed["samples"])[0])
    return ParsedInput(molecule, ics, force_field, rotor_spec, initial, dyn_options)


# -- deterministic JSON --------------------------------------------------------


def _json_escape(s: str) -> str:
    out = []
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def emit_json(obj, indent: int = 0) -> str:
    """JSON text with insertion-ordered keys and %.12e float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{_json_escape(str(k))}: {emit_json(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{emit_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        if math.isnan(x):
            return '"nan"'
        return f"{x:.12e}"
    if obj is None:
        return "null"
    return _json_escape(str(obj))


# -- pipeline ------------------------------------------------------------------


@dataclass
class _Outputs:
    directory: Path
    written: list = field(default_factory=list)

    def write(self, name: str, content: str) -> Path:
        path = self.directory / name
        path.write_text(content)
        self.written.append(path)
        return path

    def cleanup(self):
        for path in self.written:
            try:
                path.unlink()
            except OSError:
                pass


def _solve_modes(parsed: ParsedInput, unit_mode: str):
    b = mo.build_b_matrix(parsed.molecule, parsed.internal_coordinates)
    masses = mo.MassMatrix.from_molecule(parsed.molecule)
    g = mo.build_g_matrix(b, masses)
    mode = "natural" if unit_mode == "natural" else "spectroscopic"
    result = nm.solve(g, parsed.force_field, b=b, masses=masses, unit_mode=mode)
    return b, masses, g, result


def _xyz_frames(molecule: mo.Molecule, result, job: JobSpec) -> str:
    chunks = []
    for i in range(result.nmodes):
        mode_vec = result.cart_displacements[:, i]
        geoms = nm.mode_animation(molecule, mode_vec, job.amplitude, job.frames)
        freq = result.frequencies_cm[i]
        for t, geom in enumerate(geoms):
            chunks.append(f"{molecule.natoms}")
            chunks.append(f"mode={i} freq={freq:.6f} frame={t}")
            for atom, xyz in zip(molecule.atoms, geom):
                chunks.append(
                    f"{atom.label} {xyz[0]:.10f} {xyz[1]:.10f} {xyz[2]:.10f}"
                )
    return "\n".join(chunks) + "\n"


def _levels_text(spec: ro.RotorSpec, levels) -> str:
    lines = [
        f"# rotor: A={spec.a_const:.6f} B={spec.b_const:.6f} C={spec.c_const:.6f} "
        f"({spec.classification})",
        "#   J  parity  index        E(cm-1)  degeneracy",
    ]
    for lv in levels:
        lines.append(
            f"{lv.j:5d}  {lv.parity_class:>6s}  {lv.index:5d} {lv.energy:14.6f}  {lv.degeneracy:10d}"
        )
    return "\n".join(lines) + "\n"


def _trajectory_csv(times, states) -> str:
    n = states.shape[1]
    header = "t," + ",".join(f"x{i + 1}" for i in range(n))
    rows = [header]
    for t, x in zip(times, states):
        rows.append(",".join([f"{t:.12e}"] + [f"{v:.12e}" for v in x]))
    return "\n".join(rows) + "\n"


def run(job: JobSpec) -> int:
    """Execute a job; returns the process exit code."""
    outputs = _Outputs(directory=job.output_dir)
    try:
        parsed = parse_input(job.input_path)
        job.output_dir.mkdir(parents=True, exist_ok=True)
        report = {
            "input": job.input_path.name,
            "tasks": list(job.tasks),
            "unit_mode": job.unit_mode,
        }

        needs_modes = any(
            t in job.tasks for t in ("modes", "dynamics", "watson-diagnostics")
        )
        if needs_modes:
            b, masses, g, result = _solve_modes(parsed, job.unit_mode)

        if "modes" in job.tasks:
            ecd = (
                wa.eckart_conditions_check(parsed.molecule, result.l)
                if parsed.molecule.dimensionality == 3
                else None
            )
            report["modes"] = {
                "lambdas": list(result.lambdas),
                "frequencies": list(result.frequencies_cm),
                "eckart_residuals": (
                    {
                        "translational": list(ecd.translational),
                        "rotational": list(ecd.rotational),
                    }
                    if ecd is not None
                    else None
                ),
            }
            outputs.write("modes.xyz", _xyz_frames(parsed.molecule, result, job))

        if "dynamics" in job.tasks:
            if parsed.initial_conditions is None:
                raise ValidationError("dynamics task requires a [dynamics] section")
            metric = SymMatrix(np.linalg.inv(g.entries))
            times = np.linspace(
                0.0,
                parsed.dynamics_options["t_end"],
                parsed.dynamics_options["samples"],
            )
            states = dyn.trajectory_closed_form(
                result, metric, parsed.initial_conditions, times
            )
            energy0 = float(
                0.5
                * parsed.initial_conditions.beta_vel
                @ metric.entries
                @ parsed.initial_conditions.beta_vel
                + 0.5
                * parsed.initial_conditions.kappa
                @ parsed.force_field.f.entries
                @ parsed.initial_conditions.kappa
            )
            report["dynamics"] = {
                "t_end": parsed.dynamics_options["t_end"],
                "samples": parsed.dynamics_options["samples"],
                "energy": energy0,
            }
            outputs.write("trajectory.csv", _trajectory_csv(times, states))

        if "watson-diagnostics" in job.tasks:
            if parsed.molecule.dimensionality != 3:
                raise ValidationError(
                    "watson-diagnostics requires a 3-dimensional molecule"
                )
            cd = wa.coriolis_data(parsed.molecule, result.l)
            sr = wa.sum_rule_residuals(cd, parsed.molecule, result.l)
            ie = wa.inertia_expansion(parsed.molecule, result.l)
            unit = "natural" if job.unit_mode == "natural" else "cm"
            nvib = cd.n_modes
            report["watson"] = {
                "zeta": [
                    [list(cd.zeta[a, k]) for k in range(nvib)] for a in range(3)
                ],
                "interaction_coefficients": [
                    [list(cd.a_coeff[k, a]) for a in range(3)] for k in range(nvib)
                ],
                "sum_rule_residuals": {
                    "rule1": sr.rule1,
                    "rule2": sr.rule2,
                    "rule3": sr.rule3,
                },
                "inertia_tensor": [list(row) for row in ie.i0],
                "watson_u0": wa.watson_u(ie, np.zeros(nvib), unit),
            }

        if "rotor" in job.tasks:
            spec = parsed.rotor_spec
            if spec is None:
                spec = ro.rotor_spec_from_inertia(
                    mo.inertia(parsed.molecule).rotational_constants
                )
                if spec is None:
                    raise ValidationError(
                        "no [rotor] section and the molecular inertia is degenerate"
                    )
            levels = ro.asymmetric_levels(spec, job.jmax)
            report["rotor"] = {
                "constants": {
                    "a": spec.a_const,
                    "b": spec.b_const,
                    "c": spec.c_const,
                },
                "classification": spec.classification,
                "jmax": job.jmax,
                "levels": [
                    {
                        "j": lv.j,
                        "parity": lv.parity_class,
                        "index": lv.index,
                        "energy": lv.energy,
                        "degeneracy": lv.degeneracy,
                    }
                    for lv in levels
                ],
            }
            outputs.write("levels.txt", _levels_text(spec, levels))

        outputs.write("report.json", emit_json(report) + "\n")
        return 0
    except (ParseError, ValidationError, OSError) as exc:
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        QuadformError,
        mo.MoleculeError,
        dyn.DynamicsError,
        wa.WatsonError,
        ro.RotorError,
        np.linalg.LinAlgError,
    ) as exc:
        outputs.cleanup()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vibrot",
        description="Normal modes, harmonic dynamics, Watson diagnostics "
        "and rigid-rotor levels from a single input file.",
    )
    sub = parser.add_subparsers(dest="command")
    analyze = sub.add_parser("analyze", help="run an analysis job")
    analyze.add_argument("input", help="input file path")
    analyze.add_argument(
        "--tasks",
        default="modes",
        help=f"comma-separated subset of: {', '.join(TASKS)}",
    )
    analyze.add_argument("--out", default=".", help="output directory")
    analyze.add_argument(
        "--units", default="cm", choices=("natural", "cm"), help="frequency units"
    )
    analyze.add_argument("--jmax", type=int, default=5, help="highest rotor J")
    analyze.add_argument(
        "--frames", type=int, default=20, help="animation frames per mode"
    )
    analyze.add_argument(
        "--amplitude", type=float, default=0.3, help="animation amplitude (Angstrom)"
    )
    args = parser.parse_args(argv)
    if args.command != "analyze":
        parser.print_usage(sys.stderr)
        return 2
    try:
        job = JobSpec(
            input_path=args.input,
            tasks=tuple(t.strip() for t in args.tasks.split(",") if t.strip()),
            output_dir=args.out,
            unit_mode=args.units,
            jmax=args.jmax,
            frames=args.frames,
            amplitude=args.amplitude,
        )
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
