"""
Finite-difference gradient checking.

Reverse-mode gradients are compared against central differences on a
sampled subset of coordinates per parameter. Coordinates where the two
one-sided slopes disagree sharply sit on a non-differentiable point (a ReLU
kink) and are skipped rather than failed, but a check that skips more than
half of its sampled coordinates, or checks none, does not pass.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from ..core.errors import NonDeterminismError
from ..utils.seeding import GRADCHECK, substream
from .tensor import Parameter, Tensor, backward

logger = logging.getLogger(__name__)

KINK_TOLERANCE = 1e-3
MAX_SKIPPED_SHARE = 0.5
# central differences lose about eps * |f| / step to rounding; errors below
# NOISE_FACTOR times that are indistinguishable from zero
NOISE_FACTOR = 64.0


@dataclass
class GradcheckReport:
    max_rel_error: float
    worst_parameter: str
    worst_index: int
    n_checked: int
    n_skipped: int
    tolerance: float
    noise_floor: float
    passed: bool
    per_parameter: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def noise_floor(f0: float, step: float) -> float:
    """Absolute error a central difference of `f0` with `step` can carry from rounding alone."""
    return NOISE_FACTOR * float(np.finfo(np.float64).eps) * max(1.0, abs(f0)) / step


def _is_kink(f_minus: float, f0: float, f_plus: float, step: float) -> bool:
    slope_plus = (f_plus - f0) / step
    slope_minus = (f0 - f_minus) / step
    scale = max(abs(slope_plus), abs(slope_minus), 1.0)
    return abs(slope_plus - slope_minus) > KINK_TOLERANCE * scale


def finite_diff_gradcheck(
    forward: Callable[[], Tensor],
    params: Sequence[Parameter],
    tolerance: float = 1e-4,
    step: float = 1e-6,
    max_coords: int = 64,
    seed: int = 0,
    atol: Optional[float] = None,
) -> GradcheckReport:
    """Check reverse-mode gradients of the scalar `forward()` against central differences.

    A coordinate passes when its relative error is below `tolerance` or its
    absolute error is below `atol` (default: the rounding noise floor of the
    central difference at `f0`). The check fails when no coordinate was
    compared or when more than half of the sampled ones sat on kinks.

    Raises:
        NonDeterminismError: two forward passes on identical parameters differ.
    """
    first = forward()
    second = forward()
    if not np.array_equal(first.data, second.data):
        raise NonDeterminismError("two forward passes on identical inputs returned different values")
    f0 = first.item()
    floor = noise_floor(f0, step) if atol is None else atol

    for p in params:
        p.zero_grad()
    backward(forward())
    analytic = {p.name: p.grad.reshape(-1).copy() for p in params}

    rng = substream(seed, GRADCHECK)
    worst = (0.0, "", -1)
    per_parameter: Dict[str, float] = {}
    n_checked = 0
    n_skipped = 0
    passed = True

    for p in params:
        flat = p.data.reshape(-1)  # view: p.data is contiguous
        if flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        param_worst = 0.0
        for i in coords:
            original = flat[i]
            flat[i] = original + step
            f_plus = forward().item()
            flat[i] = original - step
            f_minus = forward().item()
            flat[i] = original

            if _is_kink(f_minus, f0, f_plus, step):
                n_skipped += 1
                continue
            n_checked += 1
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(analytic[p.name][i])
            abs_err = abs(a - numeric)
            if abs_err < floor:
                continue
            rel = relative_error(a, numeric)
            if rel >= tolerance:
                passed = False
            param_worst = max(param_worst, rel)
            if rel > worst[0]:
                worst = (rel, p.name, int(i))
        per_parameter[p.name] = param_worst

    sampled = n_checked + n_skipped
    if n_checked == 0:
        logger.warning(f"gradcheck compared no coordinates ({n_skipped} on kinks)")
        passed = False
    elif n_skipped > MAX_SKIPPED_SHARE * sampled:
        logger.warning(f"gradcheck skipped {n_skipped}/{sampled} coordinates on kinks")
        passed = False

    report = GradcheckReport(
        max_rel_error=worst[0],
        worst_parameter=worst[1],
        worst_index=worst[2],
        n_checked=n_checked,
        n_skipped=n_skipped,
        tolerance=tolerance,
        noise_floor=floor,
        passed=passed,
        per_parameter=per_parameter,
    )
    logger.info(
        f"gradcheck: max_rel_error={report.max_rel_error:.3e} worst={report.worst_parameter} "
        f"checked={n_checked} skipped={n_skipped} passed={passed}"
    )
    return report
