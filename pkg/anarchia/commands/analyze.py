import logging

import click

from anarchia.bounds import SearchDomain, analyze as analyze_latency, predict_scaling
from anarchia.commands import emit_json, fail
from anarchia.constants import DEFAULT_GRID_POINTS, DEFAULT_T_MAX, EXIT_PROPERTY_FAILURE
from anarchia.errors import DegenerateDenominator
from anarchia.registry import LatencyRegistry, parse_cli_params
from anarchia.utils import parse_weight, render_real

logger = logging.getLogger(__name__)


def _float_list(raw: str):
    return [float(parse_weight(v)) for v in raw.split(",") if v.strip()]


@click.command()
@click.option("--family", required=True, help="Latency family id, e.g. poly_sum or exp_base.")
@click.option("--params", default="", help="Comma list of family parameters (';' splits poly_log_product).")
@click.option("--w", "weight", default="1", show_default=True, help="Maximum player weight (rational).")
@click.option("--i-values", default="", help="Comma list of weights i <= w (default: w).")
@click.option("--tmax", default=DEFAULT_T_MAX, show_default=True, type=float, help="Base congestion range end.")
@click.option("--grid", default=DEFAULT_GRID_POINTS, show_default=True, type=int, help="Grid points per axis.")
@click.option("--scaling", default="", help="Comma list of congestion scales for the predicted lower bound.")
def analyze(family, params, weight, i_values, tmax, grid, scaling):
    """Bound report (g*, g_hat, poa_bound) for one latency function."""
    try:
        f = LatencyRegistry.build(family, parse_cli_params(family, params))
        w = float(parse_weight(weight))
        dom = SearchDomain.for_weight(w, i_values=_float_list(i_values) or None, t_max=tmax, grid_points=grid)
        dom.checked_i_values(w)
        scales = _float_list(scaling)
    except ValueError as e:
        fail(e)

    logger.info(f"Analyzing {f.describe()} with w={weight}")
    try:
        report = analyze_latency(f, w, dom)
    except DegenerateDenominator as e:
        fail(e, EXIT_PROPERTY_FAILURE)
    except Exception as e:
        logger.error(f"Unexpected error analyzing {f.describe()}: {e}", exc_info=True)
        raise

    data = report.to_dict()
    if scales:
        data["predicted_scaling"] = [
            {"t": t, "lower_bound": render_real(v)} for t, v in predict_scaling(f, w, scales)
        ]
    emit_json(data)
