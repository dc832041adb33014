"""Command line: ``nlob <command> --config FILE --seed N --out DIR``.

Configs are flat ``key=value`` text with ``#`` comments. Every run writes
``manifest.txt`` next to its CSVs; feeding that file back as ``--config``
reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import book, equilibrium, hydro, limits, master, particle
from .errors import ConfigurationError
from .model import AmplitudeLaw, LatticeDistribution, ModelParams, NewsSequence, sample_news

AUTO = "auto"

_MODEL_KEYS = {"c": 1.0, "K": 1.0, "C_lambda": AUTO, "C_mu": AUTO, "tick": 1.0}
_NEWS_KEYS = {
    "news_l": "", "news_m": "",
    "news_rate_l": 0.0, "news_rate_m": 0.0,
    "news_law": "constant", "news_a": 1.0, "news_b": 0.0, "news_sign": 1,
}

SCHEMAS = {
    "master": {**_MODEL_KEYS, **_NEWS_KEYS, "s": 0.0, "d": 0.0, "init": "equilibrium",
               "tail_eps": 1e-12, "horizon": 10.0, "dt": 1e-3, "stride": 100, "scheme": "auto"},
    "equilibrium": {**_MODEL_KEYS, "s": 0.0, "d": 0.0, "n_max": 20, "tail_eps": 1e-12},
    "hydro": {**_MODEL_KEYS, "s": 0.0, "d0": -0.5, "horizon": 10.0, "dt": 1e-3, "V": AUTO},
    "particles": {**_MODEL_KEYS, **_NEWS_KEYS, "N": 1000, "s": 0.0, "d": 0.0, "init": "equilibrium",
                  "tail_eps": 1e-12, "horizon": 10.0, "dt_micro": 1e-2, "sample_dt": 0.1,
                  "bucket": 1.0},
    "converge": {**_MODEL_KEYS, "Ns": "100,400,1600", "R": 32, "s": 0.0, "d": 0.5, "init": "point",
                 "tail_eps": 1e-12, "horizon": 5.0, "alpha": -1.0, "dt_micro": 1e-3,
                 "sample_dt": 0.25},
    "limits": {"c": 1.0, "xs": "0,0.5", "ns": "16,64,256", "ehrenfest_N": 50, "x0": 0.0,
               "L0": 0.0, "M0": 0.0, "dt": 0.01, "horizon": 200.0},
    "book": {"replay": "", "n_random": 10000, "start_ask": 0, "span": 10},
    "fig2": {"N": 1000, "tick": 0.1, "c": 0.05, "K": 0.0333, "A": 80.0, "s0": 0.0,
             "C_lambda": AUTO, "t_shock": 500.0, "mean_wait": 1500.0, "horizon": 8000.0,
             "dt_micro": 0.5, "bucket": 10.0, "shock_target": "L"},
}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _coerce(key: str, value: str, default):
    if isinstance(default, str):
        if default == AUTO and value != AUTO:
            try:
                return float(value)
            except ValueError:
                raise ConfigurationError(f"{key}: expected a number or 'auto', got {value!r}") from None
        return value
    try:
        if isinstance(default, bool):
            return value.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(value)
        return float(value)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {value!r} as {type(default).__name__}") from None


def resolve_config(command: str, raw: dict) -> dict:
    schema = SCHEMAS[command]
    unknown = sorted(set(raw) - set(schema) - {"seed"})
    if unknown:
        raise ConfigurationError(f"unknown keys for {command}: {', '.join(unknown)}")
    cfg = dict(schema)
    for key, value in raw.items():
        if key != "seed":
            cfg[key] = _coerce(key, value, schema[key])
    return cfg


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def write_manifest(path: Path, command: str, cfg: dict, seed: int) -> None:
    lines = [f"# nlob {command}", f"seed={seed}"]
    lines += [f"{k}={_fmt(v)}" for k, v in cfg.items()]
    path.write_text("\n".join(lines) + "\n")


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _script(text: str) -> tuple:
    """``"t:a;t:a"`` -> ((t, a), ...)"""
    events = []
    for item in text.split(";"):
        if item.strip():
            t, a = item.split(":")
            events.append((float(t), float(a)))
    return tuple(events)


def _params(cfg: dict, s: float) -> ModelParams:
    base = ModelParams(c=cfg["c"], K=cfg["K"], tick=cfg.get("tick", 1.0))
    C_l = cfg["C_lambda"]
    C_m = cfg["C_mu"]
    if C_l == AUTO or C_m == AUTO:
        V = hydro.equilibrium_V(s, base) if base.K > 0 else 1.0
        C_l = V if C_l == AUTO else C_l
        C_m = C_l if C_m == AUTO else C_m
    return base.replace(C_lambda=C_l, C_mu=C_m)


def _news(cfg: dict, seed: int) -> NewsSequence:
    scripted = NewsSequence(_script(cfg["news_l"]), _script(cfg["news_m"]))
    if cfg["news_rate_l"] == 0 and cfg["news_rate_m"] == 0:
        return scripted
    if scripted:
        raise ConfigurationError("give either scripted news or news rates, not both")
    law = AmplitudeLaw(cfg["news_law"], cfg["news_a"], cfg["news_b"], cfg["news_sign"])
    return sample_news(cfg["news_rate_l"], cfg["news_rate_m"], law, cfg["horizon"], seed)


def _initial_dist(cfg: dict, params: ModelParams, s: float) -> LatticeDistribution:
    if cfg["init"] not in ("equilibrium", "point"):
        raise ConfigurationError("init must be 'equilibrium' or 'point'")
    return master.initial_state(s, params, tail_eps=cfg["tail_eps"], point_mass=cfg["init"] == "point").dist


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_master(cfg, seed, out: Path):
    params = _params(cfg, cfg["s"])
    state = master.initial_state(cfg["s"], params, cfg["d"], cfg["tail_eps"], cfg["init"] == "point")
    traj = master.integrate(state, params, _news(cfg, seed), cfg["horizon"], cfg["dt"],
                            cfg["stride"], cfg["scheme"])
    traj.to_csv(out / "master.csv")


def run_equilibrium(cfg, seed, out: Path):
    params = _params(cfg, cfg["s"])
    s, c = cfg["s"], params.c
    measure = equilibrium.stationary_pi(s, params, tail_eps=cfg["tail_eps"])
    V = hydro.equilibrium_V(s, params)
    el, em = equilibrium.disagreement_expectations(s, cfg["d"], params)
    feller = equilibrium.feller_objects(s, c, cfg["n_max"])
    rows = [
        ("Xi_direct", equilibrium.theta_normalizer_direct(s, c)),
        ("Xi_theta", equilibrium.theta_normalizer_series(s, c)),
        ("detailed_balance_residual", equilibrium.detailed_balance_residual(measure, params)),
        ("V", V),
        ("E_lambda_d", el),
        ("E_mu_d", em),
        ("exp_cd", math.exp(c * cfg["d"])),
        ("entrance_sum", feller.entrance_sum),
        ("entrance_tail_bound", feller.tail_bound),
    ]
    _write_rows(out / "equilibrium.csv", ["quantity", "value"], rows)
    _write_rows(out / "pi.csv", ["n", "pi"], zip(measure.dist.indices.tolist(), measure.dist.mass.tolist()))
    _write_rows(out / "feller.csv", ["n", "log_x", "log_speed"],
                zip(range(cfg["n_max"] + 1), feller.scale.log_x.tolist(), feller.scale.log_speed.tolist()))


def run_hydro(cfg, seed, out: Path):
    params = _params(cfg, cfg["s"])
    V = hydro.equilibrium_V(cfg["s"], params) if cfg["V"] == AUTO else cfg["V"]
    hydro.write_comparison_csv(out / "hydro.csv", *hydro.compare(cfg["d0"], params.c, V, cfg["horizon"], cfg["dt"]))


def run_particles(cfg, seed, out: Path):
    params = _params(cfg, cfg["s"])
    p0 = _initial_dist(cfg, params, cfg["s"])
    news = _news(cfg, seed)
    ens_seed, = np.random.SeedSequence(seed).spawn(1)
    ens = particle.init_ensemble(cfg["N"], p0, cfg["s"] + cfg["d"], cfg["s"] - cfg["d"], ens_seed)
    n_samples = math.ceil(cfg["horizon"] / cfg["sample_dt"] - 1e-9)
    log = particle.EventLog()
    rows = [(0.0, ens.L, ens.M, float(ens.positions.mean()) * params.tick, float(ens.positions[0]) * params.tick)]
    for k in range(1, n_samples + 1):
        t_next = min(k * cfg["sample_dt"], cfg["horizon"])
        ens, part = particle.advance(ens, params, cfg["dt_micro"], t_next - ens.t, news=news)
        log.extend(part)
        rows.append((ens.t, ens.L, ens.M, float(ens.positions.mean()) * params.tick,
                     float(ens.positions[0]) * params.tick))
    log.to_csv(out / "events.csv")
    _write_rows(out / "summary.csv", ["t", "L", "M", "price_mean", "price_particle0"], rows)
    starts, counts = particle.volume_series(log, cfg["bucket"], 0.0, cfg["horizon"])
    _write_rows(out / "volume.csv", ["bucket_start", "count"], zip(starts.tolist(), counts.tolist()))


def run_converge(cfg, seed, out: Path):
    s, d = cfg["s"], cfg["d"]
    params = _params(cfg, s)
    p0 = _initial_dist(cfg, params, s)
    report = particle.convergence_experiment(
        _ints(cfg["Ns"]), params, p0, s + d, s - d, cfg["horizon"], cfg["alpha"], cfg["R"], seed,
        cfg["dt_micro"], cfg["sample_dt"],
    )
    report.to_csv(out / "convergence.csv")


def run_limits(cfg, seed, out: Path):
    rows = limits.scaling_table(xs=_floats(cfg["xs"]), ns=_ints(cfg["ns"]), c=cfg["c"])
    limits.write_scaling_csv(out / "scaling.csv", rows)
    n = cfg["ehrenfest_N"]
    _write_rows(out / "ehrenfest.csv", ["N", "tv_to_gaussian"], [(n, limits.ehrenfest_gaussian_tv(n))])
    path = limits.simulate_continuum(cfg["x0"], cfg["L0"], cfg["M0"], cfg["c"], cfg["dt"], cfg["horizon"], seed)
    path.to_csv(out / "sde.csv")


def run_book(cfg, seed, out: Path):
    if cfg["replay"]:
        rows = book.read_replay_csv(cfg["replay"])
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        sides = rng.choice([book.BUY, book.SELL], cfg["n_random"])
        rows = [(float(k), str(side), 1) for k, side in enumerate(sides)]
    records = book.replay_market_orders(rows, cfg["start_ask"], cfg["span"])
    book.write_fills_csv(out / "fills.csv", records)
    signs = [1 if side == book.BUY else -1 for _, side, qty in rows for _ in range(qty)]
    path = book.replay_ask_path(signs, cfg["start_ask"], cfg["span"])
    _write_rows(out / "ask_path.csv", ["step", "ask"], enumerate(path))
    ok = book.replay_equivalence(signs, cfg["start_ask"], cfg["span"])
    _write_rows(out / "equivalence.csv", ["events", "equivalent"], [(len(signs), ok)])


def run_fig2(cfg, seed, out: Path):
    fields = dict(cfg)
    if fields["C_lambda"] == AUTO:
        fields["C_lambda"] = None
    result = particle.run_fig2_scenario(seed, particle.Fig2Config(**fields))
    result.write_summary_csv(out / "summary.csv")
    result.write_volume_csv(out / "volume.csv")
    result.events.to_csv(out / "events.csv")


RUNNERS = {
    "master": run_master,
    "equilibrium": run_equilibrium,
    "hydro": run_hydro,
    "particles": run_particles,
    "converge": run_converge,
    "limits": run_limits,
    "book": run_book,
    "fig2": run_fig2,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlob", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(RUNNERS))
    parser.add_argument("--config", type=Path, help="key=value config file")
    parser.add_argument("--seed", type=int, help="64-bit seed")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--strict", action="store_true", help="test mode: a missing seed is an error")
    return parser


def run(command: str, raw: dict, seed: int | None, out: Path, strict: bool = False) -> int:
    if command not in RUNNERS:
        raise ConfigurationError(f"unknown command {command!r}")
    raw = dict(raw)
    if seed is None and "seed" in raw:
        seed = int(raw["seed"])
    if seed is None:
        if strict:
            raise ConfigurationError("no seed given (required with --strict)")
        seed = secrets.randbits(63)
    if not 0 <= seed < 2**64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    cfg = resolve_config(command, raw)
    out.mkdir(parents=True, exist_ok=True)
    RUNNERS[command](cfg, seed, out)
    write_manifest(out / "manifest.txt", command, cfg, seed)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = parse_config_text(args.config.read_text()) if args.config else {}
        return run(args.command, raw, args.seed, args.out, args.strict)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
