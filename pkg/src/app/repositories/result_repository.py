import logging
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np
import orjson
import pandas as pd

from src.app.exceptions.custom_exceptions import ResultWriteException
from src.app.models.valuation_model import CoefficientTable, Greeks, LsmcResult, ValuationResult

logger = logging.getLogger(__name__)


class ResultRepository:
    """
    Writes valuation reports as JSON (orjson) and CSV (pandas).
    File names are `<label>_<kind>.<ext>`, so reruns overwrite deterministically.
    """

    JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS

    def __init__(self, output_dir: str = "reports", formats: Sequence[str] = ("csv", "json")):
        self.output_dir = Path(output_dir)
        self.formats = tuple(formats)

    def with_settings(self, output_dir: str = None, formats: Sequence[str] = None) -> "ResultRepository":
        return ResultRepository(
            output_dir if output_dir is not None else str(self.output_dir),
            formats if formats is not None else self.formats,
        )

    # ─── Low-level writers ───────────────────────────────────────────────

    def _path(self, label: str, kind: str, ext: str) -> Path:
        return self.output_dir / f"{label}_{kind}.{ext}"

    def write_json(self, label: str, kind: str, payload) -> Path:
        path = self._path(label, kind, "json")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(orjson.dumps(payload, option=self.JSON_OPTIONS))
        except (OSError, TypeError) as e:
            logger.error(f"❌ Failed to write {path}: {e}")
            raise ResultWriteException(f"could not write {path}", details=str(e))
        logger.info(f"💾 Wrote {path}")
        return path

    def write_csv(self, label: str, kind: str, rows: Iterable[dict]) -> Path:
        path = self._path(label, kind, "csv")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(list(rows)).to_csv(path, index=False, float_format="%.10g")
        except OSError as e:
            logger.error(f"❌ Failed to write {path}: {e}")
            raise ResultWriteException(f"could not write {path}", details=str(e))
        logger.info(f"💾 Wrote {path}")
        return path

    def save_table(self, label: str, kind: str, rows: List[dict]) -> List[Path]:
        """Tabular result (convergence, sweep, reproduction, paths) in every configured format."""
        written = []
        if "csv" in self.formats:
            written.append(self.write_csv(label, kind, rows))
        if "json" in self.formats:
            written.append(self.write_json(label, kind, rows))
        return written

    # ─── Domain results ──────────────────────────────────────────────────

    def save_valuation(self, label: str, result: ValuationResult) -> List[Path]:
        written = []
        if "json" in self.formats:
            written.append(self.write_json(label, "valuation", result.model_dump()))
        if "csv" in self.formats:
            rows = [
                {"contract": result.contract, "sigma": result.sigma, "n_terms": result.n_terms,
                 "e": e, "value": v, "is_start": e == result.e_start}
                for e, v in zip(result.levels, result.values_per_level)
            ]
            written.append(self.write_csv(label, "valuation", rows))
        return written

    def save_greeks(self, label: str, greeks: Sequence[Greeks]) -> List[Path]:
        return self.save_table(label, "greeks", [g.model_dump() for g in greeks])

    def save_lsmc(self, label: str, result: LsmcResult) -> List[Path]:
        written = []
        payload = result.model_dump(exclude={"policy"})
        payload["out_of_sample_mean"] = result.out_of_sample_mean
        policy = result.policy
        if policy is not None:
            payload["policy"] = {
                "n_trajectories": policy.n_trajectories,
                "fraction_final_at_max": policy.fraction_final_at_max,
                "total_usage": {str(de): count for de, count in policy.total_usage().items()},
            }
        if "json" in self.formats:
            written.append(self.write_json(label, "lsmc", payload))
        if "csv" in self.formats:
            written.append(self.write_csv(label, "lsmc_runs", [run.model_dump() for run in result.runs]))
        if policy is not None:
            energy_rows = [
                {"time": t, "mean_e": mean, "ci_lo": lo, "ci_hi": hi, "min_e": lowest, "max_e": highest}
                for t, mean, lo, hi, lowest, highest in zip(
                    policy.times, policy.mean_energy, policy.ci_low, policy.ci_high,
                    policy.min_energy, policy.max_energy,
                )
            ]
            usage_rows = [{"time": t, "action": de, "count": count} for t, de, count in policy.usage_rows()]
            written.append(self.write_csv(label, "policy_energy", energy_rows))
            written.append(self.write_csv(label, "policy_actions", usage_rows))
        return written

    def save_coefficients(self, label: str, table: CoefficientTable, levels: np.ndarray) -> Path:
        """Coefficient dump in the layout (m, e, k, V_k) for m = 1..M+1."""
        n_times, n_levels, n_terms = table.values.shape
        m, j, k = np.meshgrid(np.arange(1, n_times), np.arange(n_levels), np.arange(n_terms), indexing="ij")
        frame = pd.DataFrame({
            "m": m.ravel(),
            "e": np.asarray(levels)[j.ravel()],
            "k": k.ravel(),
            "V_k": table.values[1:].ravel(),
        })
        path = self._path(label, "coefficients", "csv")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, float_format="%.12g")
        except OSError as e:
            raise ResultWriteException(f"could not write {path}", details=str(e))
        logger.info(f"💾 Wrote coefficient dump {path} ({len(frame)} rows)")
        return path
