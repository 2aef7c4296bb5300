"""CSV rendering. All files use headers, '.' decimals, LF line endings.

Floats are written with repr (shortest round-trip form), so output is
byte-identical across runs for identical inputs.
"""
from __future__ import annotations

from .adapt import Trace
from .experiment import ExperimentResult

TRACE_HEADER = "t,alpha,batch_estimate,running_estimate,boundary_hits,warnings"
MSE_HEADER = "method,checkpoint_samples,mse,replications,sign_p_vs_lw"
VARIANCE_HEADER = "method,t,total_samples,true_variance"


def _f(x: float) -> str:
    return repr(float(x))


def render_trace_csv(trace: Trace) -> str:
    lines = [TRACE_HEADER]
    for s in trace.steps:
        warnings = ";".join(s.warnings)
        lines.append(f"{s.t},{_f(s.alpha)},{_f(s.batch_estimate)},"
                     f"{_f(s.running_estimate)},{s.boundary_hits},{warnings}")
    return "\n".join(lines) + "\n"


def render_mse_csv(result: ExperimentResult) -> str:
    lines = [MSE_HEADER]
    for row in result.mse_rows:
        p = "" if row.sign_p_vs_lw is None else _f(row.sign_p_vs_lw)
        lines.append(f"{row.method},{row.checkpoint_samples},{_f(row.mse)},"
                     f"{row.replications},{p}")
    return "\n".join(lines) + "\n"


def render_variance_csv(result: ExperimentResult) -> str:
    lines = [VARIANCE_HEADER]
    for row in result.variance_rows:
        lines.append(f"{row.method},{row.t},{row.total_samples},{_f(row.true_variance)}")
    return "\n".join(lines) + "\n"


def render_kv_csv(pairs: list[tuple[str, object]]) -> str:
    """Two-column quantity,value file for the scalar subcommands."""
    lines = ["quantity,value"]
    for key, value in pairs:
        text = _f(value) if isinstance(value, float) else str(value)
        lines.append(f"{key},{text}")
    return "\n".join(lines) + "\n"
