import json
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ...domain.entities import (
    AnyField,
    CheckReport,
    ComplexField,
    CurveSample,
    Grid,
    RealField,
    SpectrumReport,
    StabilityRunReport,
    WaveProfile,
)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
BINARY_HEADER = struct.Struct("<qdq")

PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """Plain-JSON view of numpy scalars/arrays, complex numbers and pydantic models."""
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


class FileRepository:
    """Atomic file persistence for profiles, spectra, curves and runs."""

    def __init__(self, base_dir: Optional[PathLike] = None):
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.logger = logging.getLogger(__name__)

    def _resolve(self, path: PathLike) -> Path:
        path = Path(path)
        if self.base_dir is not None and not path.is_absolute():
            path = self.base_dir / path
        return path

    def _atomic_write(self, path: PathLike, writer: Callable[[Any], None], binary: bool = False) -> Path:
        target = self._resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        handle, temp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
        try:
            with os.fdopen(handle, "wb" if binary else "w", **({} if binary else {"newline": "", "encoding": "utf-8"})) as stream:
                writer(stream)
            os.replace(temp_name, target)
        except BaseException:
            if os.path.exists(temp_name):
                os.unlink(temp_name)
            raise
        self.logger.info(f"Wrote {target}")
        return target

    # --- generic ----------------------------------------------------------------------

    def save_json(self, payload: Dict[str, Any], path: PathLike) -> Path:
        text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
        return self._atomic_write(path, lambda stream: stream.write(text + "\n"))

    def load_json(self, path: PathLike) -> Dict[str, Any]:
        with open(self._resolve(path), encoding="utf-8") as stream:
            return json.load(stream)

    def save_frame(self, frame: pd.DataFrame, path: PathLike) -> Path:
        return self._atomic_write(path, lambda stream: frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT))

    def save_gnuplot(self, frame: pd.DataFrame, path: PathLike) -> Path:
        def write(stream):
            stream.write("# " + " ".join(frame.columns) + "\n")
            frame.to_csv(stream, sep=" ", index=False, header=False, float_format=FLOAT_FORMAT, na_rep="nan")

        return self._atomic_write(path, write)

    # --- fields -----------------------------------------------------------------------

    def save_field_csv(self, field: AnyField, path: PathLike) -> Path:
        x = field.grid.nodes
        if isinstance(field, RealField):
            frame = pd.DataFrame({"x": x, "value": field.values})
        else:
            frame = pd.DataFrame({"x": x, "re": field.values.real, "im": field.values.imag})
        return self.save_frame(frame, path)

    def load_field_csv(self, path: PathLike, half_period: float) -> AnyField:
        frame = pd.read_csv(self._resolve(path))
        grid = Grid(n_points=len(frame), half_period=half_period)
        if "value" in frame.columns:
            return RealField.from_values(grid, frame["value"].to_numpy(dtype=float))
        return ComplexField.from_values(grid, frame["re"].to_numpy(dtype=float) + 1j * frame["im"].to_numpy(dtype=float))

    def save_field_binary(self, field: AnyField, path: PathLike) -> Path:
        """Header (N int64, T float64, flag int64: 0 real / 1 complex), then little-endian float64 samples."""
        is_complex = isinstance(field, ComplexField)
        if is_complex:
            payload = np.empty(2 * field.n_points, dtype="<f8")
            payload[0::2] = field.values.real
            payload[1::2] = field.values.imag
        else:
            payload = np.asarray(field.values, dtype="<f8")
        header = BINARY_HEADER.pack(field.n_points, field.grid.half_period, 1 if is_complex else 0)
        return self._atomic_write(path, lambda stream: stream.write(header + payload.tobytes()), binary=True)

    def load_field_binary(self, path: PathLike) -> AnyField:
        data = self._resolve(path).read_bytes()
        n_points, half_period, flag = BINARY_HEADER.unpack_from(data)
        payload = np.frombuffer(data, dtype="<f8", offset=BINARY_HEADER.size)
        grid = Grid(n_points=n_points, half_period=half_period)
        if flag == 1:
            return ComplexField.from_values(grid, payload[0::2] + 1j * payload[1::2])
        return RealField.from_values(grid, payload.copy())

    # --- profiles ---------------------------------------------------------------------

    def save_profile(self, profile: WaveProfile, path: PathLike) -> Path:
        target = self._resolve(path)
        csv_path = target.with_name(target.stem + "_phi.csv")
        bin_path = target.with_name(target.stem + "_phi.bin")
        self.save_field_csv(profile.phi, csv_path)
        self.save_field_binary(profile.phi, bin_path)
        payload = {
            "profile_id": profile.profile_id,
            "alpha": profile.alpha,
            "lambda": profile.lambda_,
            "a": profile.a_param,
            "T": profile.half_period,
            "N": profile.grid.n_points,
            "omega": profile.omega,
            "omega_energy": profile.omega_energy,
            "omega_mass": profile.omega_mass,
            "omega_consistency": profile.omega_consistency,
            "residual_l2": profile.residual_l2,
            "energy": profile.energy,
            "converged": profile.converged,
            "positive": profile.positive,
            "phi_csv_path": csv_path.name,
            "phi_bin_path": bin_path.name,
        }
        return self.save_json(payload, target)

    def load_profile(self, path: PathLike) -> WaveProfile:
        target = self._resolve(path)
        payload = self.load_json(target)
        bin_name = payload.get("phi_bin_path")
        if bin_name and (target.parent / bin_name).exists():
            phi = self.load_field_binary(target.parent / bin_name)
        else:
            phi = self.load_field_csv(target.parent / payload["phi_csv_path"], payload["T"])
        if not isinstance(phi, RealField):
            raise ValueError(f"profile field in {target} must be real")
        return WaveProfile(
            profile_id=payload["profile_id"],
            phi=phi,
            omega=payload["omega"],
            a_param=payload["a"],
            lambda_=payload["lambda"],
            alpha=payload["alpha"],
            residual_l2=payload["residual_l2"],
            omega_consistency=payload.get("omega_consistency", 0.0),
            omega_energy=payload.get("omega_energy"),
            omega_mass=payload.get("omega_mass"),
            energy=payload.get("energy"),
            converged=payload.get("converged", True),
        )

    # --- reports ----------------------------------------------------------------------

    def save_spectrum_report(self, report: SpectrumReport, path: PathLike) -> Path:
        """JSON report with eigenvalue arrays written as CSV sidecars."""
        target = self._resolve(path)
        sidecars = {
            "eigenvalues_Lplus": pd.DataFrame({"index": np.arange(len(report.eigenvalues_Lplus)), "eigenvalue": report.eigenvalues_Lplus}),
            "eigenvalues_Lminus": pd.DataFrame({"index": np.arange(len(report.eigenvalues_Lminus)), "eigenvalue": report.eigenvalues_Lminus}),
            "dynamical_spectrum": pd.DataFrame({"re": report.dynamical_spectrum.real, "im": report.dynamical_spectrum.imag}),
            "zero_cluster": pd.DataFrame({"re": report.zero_cluster.real, "im": report.zero_cluster.imag}),
        }
        payload = report.model_dump(exclude={"eigenvalues_Lplus", "eigenvalues_Lminus", "dynamical_spectrum", "zero_cluster", "kernel_vectors"})
        payload["sigma_sq"] = report.sigma_sq
        for name, frame in sidecars.items():
            sidecar = target.with_name(f"{target.stem}_{name}.csv")
            self.save_frame(frame, sidecar)
            payload[f"{name}_csv"] = sidecar.name
        if report.kernel_vectors:
            grid = report.kernel_vectors[0].grid
            columns = {"x": grid.nodes}
            columns.update({f"v{i}": v.values for i, v in enumerate(report.kernel_vectors)})
            sidecar = target.with_name(f"{target.stem}_kernel.csv")
            self.save_frame(pd.DataFrame(columns), sidecar)
            payload["kernel_vectors_csv"] = sidecar.name
        return self.save_json(payload, target)

    def save_curve(self, samples: Sequence[CurveSample], path: PathLike) -> Path:
        """Curve CSV plus a gnuplot-ready companion with (lambda, m, omega)."""
        target = self._resolve(path)
        frame = pd.DataFrame(
            {
                "lambda": [s.lambda_ for s in samples],
                "m": [s.energy_m for s in samples],
                "omega_energy": [s.omega for s in samples],
                "omega_mass": [s.omega_mass for s in samples],
                "residual": [s.residual for s in samples],
                "n_neg_plus": pd.array([s.n_neg_plus for s in samples], dtype="Int64"),
                "vk_index": [s.vk_index for s in samples],
                "seed_disagreement": [s.seed_disagreement for s in samples],
                "sigma_sq": [s.sigma_sq for s in samples],
                "chi_phi_overlap": [s.chi_phi_overlap for s in samples],
                "warm_start_jump": [s.warm_start_jump for s in samples],
                "converged": [s.converged for s in samples],
            }
        )
        self.save_frame(frame, target)
        self.save_gnuplot(frame[["lambda", "m", "omega_energy"]], target.with_suffix(".dat"))
        return target

    def save_run(self, report: StabilityRunReport, path: PathLike) -> Path:
        frame = pd.DataFrame(
            {
                "t": report.times,
                "P": [c.momentum_p for c in report.conserved],
                "H": [c.hamiltonian_h for c in report.conserved],
                "M_re": [c.mass_m_re for c in report.conserved],
                "M_im": [c.mass_m_im for c in report.conserved],
                "distance": report.orbital_distance,
                "shift": report.shifts,
                "phase": report.phases,
            }
        )
        return self.save_frame(frame, path)

    def save_checks(self, checks: List[CheckReport], path: PathLike, extra: Optional[Dict[str, Any]] = None) -> Path:
        payload = {"checks": [check.model_dump() for check in checks]}
        payload.update(extra or {})
        return self.save_json(payload, path)
