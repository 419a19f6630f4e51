"""Q versus launch power for a trained model, the linear receiver and DBP."""

from __future__ import annotations

from dataclasses import dataclass, replace

from fibernlc.channel.config import LinkConfig, TxConfig
from fibernlc.channel.link import optimize_dbp, simulate
from fibernlc.harness.evaluation import EvalResult, evaluate, linear_q
from fibernlc.model.transformer import TransformerNLC

SWEEP_FIELDS = ("launch_power_dbm", "q_linear_db", "q_nn_db", "q_dbp_db", "dbp_xi")


@dataclass(frozen=True)
class SweepPoint:
    launch_power: float
    q_linear: float
    q_nn: float = float("nan")
    q_dbp: float = float("nan")
    dbp_xi: float = float("nan")

    def as_row(self) -> tuple:
        return (self.launch_power, self.q_linear, self.q_nn, self.q_dbp, self.dbp_xi)


def power_sweep(
    tx: TxConfig,
    link: LinkConfig,
    powers,
    n_symbols: int,
    model: TransformerNLC | None = None,
    dbp_steps: int | None = None,
    workers: int | None = None,
) -> list[SweepPoint]:
    """Simulate one eval frame per launch power (same symbol seed) and score it.

    The model, trained at its own power, is applied with launch-power
    scaling.  With ``dbp_steps`` the DBP nonlinear scale is optimized per power.
    """
    points = []
    for p in powers:
        txp = replace(tx, launch_power=float(p))
        run = simulate(txp, link, n_symbols, workers=workers)
        res: EvalResult | None = evaluate(model, run.frame) if model is not None else None
        q_lin = res.q_linear if res is not None else linear_q(run.frame)
        xi = q_dbp = float("nan")
        if dbp_steps is not None:
            xi, q_dbp = optimize_dbp(run, txp, link, dbp_steps)
        points.append(SweepPoint(float(p), q_lin, res.q_db if res else float("nan"), q_dbp, xi))
    return points
