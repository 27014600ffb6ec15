"""Chain diagnostics: autocorrelation, integrated autocorrelation time, ESS."""
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "autocorrelation",
    "integrated_autocorr_time",
    "effective_sample_size",
    "DiagnosticsReport",
    "diagnostics",
]


def autocorrelation(x, max_lag=200):
    """Normalized autocorrelation function of a 1-D series, lags ``0..max_lag``.

    Returns all-NaN beyond lag 0 for a constant series.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    max_lag = min(max_lag, n - 1)
    xc = x - x.mean()
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1] / n
    if acov[0] <= 0:
        out = np.full(max_lag + 1, np.nan)
        out[0] = 1.0
        return out
    return acov / acov[0]


def integrated_autocorr_time(x, max_lag=None):
    """Integrated autocorrelation time with Geyer's initial positive sequence.

    ``tau = -1 + 2 sum_k Gamma_k`` where ``Gamma_k = rho_{2k} + rho_{2k+1}``
    is summed while positive (and forced monotone).  Equals one for white
    noise.  A constant series gives ``inf``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    rho = autocorrelation(x, max_lag=n - 1 if max_lag is None else max_lag)
    if not np.isfinite(rho[1:]).all():
        return np.inf
    m = (rho.size - 1) // 2
    pairs = rho[: 2 * m : 2] + rho[1 : 2 * m : 2]
    total, prev = 0.0, np.inf
    for g in pairs:
        if g <= 0:
            break
        g = min(g, prev)
        total += g
        prev = g
    return max(-1.0 + 2.0 * total, 1.0 / n)


def effective_sample_size(x, weights=None):
    """``n / tau``; with importance weights the Kish factor is applied too."""
    x = np.asarray(x, dtype=float)
    tau = integrated_autocorr_time(x)
    n = x.size
    if not np.isfinite(tau):
        return 1.0
    ess = n / tau
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        ess *= (w.sum() ** 2 / np.sum(w ** 2)) / n
    return float(min(max(ess, 1.0), n))


@dataclass
class DiagnosticsReport:
    acceptance_rate: float
    n_points: int
    acf: dict
    iat: dict
    ess: dict
    degenerate: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "acceptance_rate": self.acceptance_rate,
            "n_points": self.n_points,
            "iat": self.iat,
            "ess": self.ess,
            "degenerate": self.degenerate,
            "warnings": self.warnings,
            "acf": {k: v.tolist() for k, v in self.acf.items()},
        }


def diagnostics(samples, max_lag=200, columns=None):
    """Per-coordinate ACF, IAT and ESS for a :class:`~hmcstate.hmc.SampleSet`.

    ``columns`` maps names to 1-D series; by default the angle coordinates
    ``theta_1 .. theta_S`` are analyzed.
    """
    if columns is None:
        columns = {f"theta_{s + 1}": samples.points[:, s] for s in range(samples.points.shape[1])}
    acf, iat, ess, degenerate = {}, {}, {}, []
    for name, series in columns.items():
        series = np.asarray(series, dtype=float)
        acf[name] = autocorrelation(series, max_lag)
        t = integrated_autocorr_time(series)
        iat[name] = float(t)
        ess[name] = effective_sample_size(series)
        if not np.isfinite(t):
            degenerate.append(name)
    rate = samples.metadata.get("acceptance_rate", float("nan"))
    warnings = []
    if samples.points.shape[1] >= 4 and not 0.6 <= rate <= 0.9:
        warnings.append(
            f"acceptance rate {rate:.3f} outside [0.6, 0.9]; "
            "retune tau or L (about 0.65 is efficient in higher dimension)"
        )
    if degenerate:
        warnings.append(f"constant chain in {', '.join(degenerate)}")
    return DiagnosticsReport(rate, len(samples), acf, iat, ess, degenerate, warnings)
