"""Command-line front end: one subcommand per scenario.

    nanolander <gravity|hop|tumble|coverage|exclusion|evolve> --config FILE --out DIR [--seed N]

Every run writes its data files plus ``manifest.json`` into ``--out``.
Exit status is 0 on success, 1 on invalid input or a failed simulation and
2 when a simulation finished without converging (the outputs are still
written). Set ``NANOLANDER_LOG`` to DEBUG, INFO, WARNING or ERROR to change
log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, evolve, gravity, mobility, swarm
from .config import KINDS, ConfigError, ScenarioConfig, parse_config

log = logging.getLogger("nanolander")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNCONVERGED = 2
MANIFEST = "manifest.json"


@dataclass
class RunManifest:
    kind: str
    config_hash: str
    version: str
    seed: int
    wall_time_s: float
    files: list[str]
    converged: bool = True
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "version": self.version,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
            "files": self.files,
            "converged": self.converged,
            "summary": self.summary,
        }


# --------------------------------------------------------------------------
# Scenario runners: each returns (files written, converged, summary)
# --------------------------------------------------------------------------

def _gravity(p: dict, out: Path):
    if p["shape"]:
        shape = gravity.load_shape(p["shape"], density=p["density"])
    elif p["builtin"] == "cube":
        shape = gravity.box((p["size"],) * 3, density=p["density"])
    else:
        shape = gravity.icosphere(p["size"], p["subdivisions"], p["density"], axes=p["axes"])
    gmap = gravity.surface_gravity_map(shape, (p["plane"], p["offset"]), p["resolution"])
    gravity.write_map_csv(out / "gravity_map.csv", gmap)
    mag = gmap.magnitude[gmap.valid]
    summary = {
        "points": int(gmap.valid.size),
        "valid_points": int(gmap.valid.sum()),
        "min_accel": float(mag.min()) if mag.size else None,
        "max_accel": float(mag.max()) if mag.size else None,
        "mass_kg": shape.mass,
    }
    return ["gravity_map.csv"], True, summary


def _hop(p: dict, out: Path):
    body = mobility.LanderBody(m_s=p["m_s"])
    prop = mobility.PropulsionUnit(thrust=p["thrust"], isp=p["isp"], propellant_mass=p["propellant_mass"])
    ctrl = mobility.AttitudeController(K_p=p["k_p"], K_d=p["k_d"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", mobility.EscapeWarning)
        traj = mobility.propelled_hop(body, prop, ctrl, p["g"], prop.burn_time_for(p["burn_mass"]), p["dt"],
                                      euler0=tuple(p["euler0"]), v_esc=p["v_esc"])
    for w in caught:
        log.warning("%s", w.message)
    traj.write_csv(out / "trajectory.csv")
    traj.write_summary(out / "summary.json")
    return ["trajectory.csv", "summary.json"], True, traj.summary()


def _tumble(p: dict, out: Path):
    body = mobility.LanderBody(m_s=p["m_s"], I_s=p["i_s"], l=p["l"], alpha=p["alpha"], beta=p["beta"], eta=p["eta"])
    wheel = mobility.ReactionWheel(I_r=p["i_r"], tau_max=p["tau_max"], omega_max=p["omega_max"])
    contact = mobility.ContactParams.critically_damped(body, k_n=p["k_n"], mu_f=p["mu_f"])
    if p["wheel_speed"] is not None:
        omega = p["wheel_speed"]
    elif p["target_range"] is not None:
        omega = mobility.braked_wheel_speed_for_range(body, wheel, p["target_range"], p["g"])
    else:
        omega = 1.5 * mobility.hop_wheel_speed_threshold(body, wheel, p["g"])
    traj = mobility.hybrid_control_hop(body, wheel, contact, omega, p["g"], p["dt"],
                                       settle_time=p["settle_time"], t_max=p["t_max"])
    traj.write_csv(out / "trajectory.csv")
    traj.write_summary(out / "summary.json")
    summary = {**traj.summary(), "mode": traj.info.get("mode"), "wheel_speed": omega}
    return ["trajectory.csv", "summary.json"], traj.info.get("mode") != "timeout", summary


def _swarm_setup(p: dict):
    params = swarm.VirtualForceParams(C_cov=p["c_cov"], C_com=p["c_com"], C_obs=p["c_obs"], R_c=p["r_c"],
                                      R_s=p["r_s"], D=p["degree"], m_i=p["mass"], mu_i=p["damping"],
                                      com_law=p["com_law"])
    obs = [o[:2] for o in p["obstacles"]]
    radii = [o[2] for o in p["obstacles"]]
    init = swarm.random_deployment(p["n_landers"], p["seed"], p["deploy_side"], obstacles=obs, obstacle_radii=radii)
    rule = swarm.SettleRule(eps=p["settle_eps"], window=p["settle_window"])
    return params, init, rule


def _coverage(p: dict, out: Path):
    params, init, rule = _swarm_setup(p)
    _, trace, metrics = swarm.run_coverage(init, params, p["dt"], p["max_steps"], area_side=p["area_side"], rule=rule)
    trace.write_csv(out / "swarm.csv")
    swarm.write_metrics(out / "metrics.json", metrics)
    return ["swarm.csv", "metrics.json"], metrics.settled, metrics.to_dict()


def _exclusion(p: dict, out: Path):
    params, init, rule = _swarm_setup(p)
    _, trace, metrics = swarm.run_exclusion(init, p["impact_site"], params, p["dt"], p["max_steps"],
                                            area_side=p["area_side"], rule=rule, gain=p["exclusion_gain"])
    trace.write_csv(out / "swarm.csv")
    swarm.write_metrics(out / "metrics.json", metrics)
    summary = {**metrics.to_dict(), "exclusion_clear": metrics.min_site_dist >= p["exclusion_radius"]}
    return ["swarm.csv", "metrics.json"], metrics.settled and summary["exclusion_clear"], summary


def _evolve(p: dict, out: Path):
    cfg = evolve.CampaignConfig(pop_size=p["pop_size"], generations=p["generations"], p_crossover=p["p_crossover"],
                                p_mutation=p["p_mutation"], eval_seeds=tuple(p["eval_seeds"]),
                                master_seed=p["master_seed"], area_side=p["area_side"], r_c=p["r_c"],
                                max_steps=p["max_steps"])
    result = evolve.run_nsga2(cfg)
    result.write_history_csv(out / "generations.csv")
    result.write_pareto_json(out / "pareto.json")
    best = result.best
    ph = evolve.decode(best.genotype)
    summary = {"best_overall": best.overall, "best_N": ph.N, "best_D": ph.D, "best_Ccov": ph.C_cov,
               "best_Ccom": ph.C_com, "evaluations": result.evaluations}
    return ["generations.csv", "pareto.json"], True, summary


RUNNERS = {
    "gravity": _gravity,
    "hop": _hop,
    "tumble": _tumble,
    "coverage": _coverage,
    "exclusion": _exclusion,
    "evolve": _evolve,
}


def run(config: ScenarioConfig, out_dir: str | Path | None = None) -> RunManifest:
    """Run one scenario and write its outputs and manifest into ``out_dir``."""
    out = Path(out_dir if out_dir is not None else config.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    log.info("running %s scenario into %s", config.kind, out)
    try:
        files, converged, summary = RUNNERS[config.kind](config.params, out)
    except (ValueError, OSError) as exc:
        raise RuntimeError(f"{config.kind} scenario failed: {exc}") from exc
    with open(out / "config.resolved.json", "w", encoding="utf-8") as fh:
        json.dump({"kind": config.kind, **config.params}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    # everything under out, so files left by earlier runs are listed too
    on_disk = {str(f.relative_to(out)) for f in out.rglob("*") if f.is_file()}
    files = sorted(on_disk | set(files) | {"config.resolved.json", MANIFEST})
    manifest = RunManifest(config.kind, config.digest(), __version__, config.master_seed,
                           round(time.perf_counter() - start, 6), files, converged, summary)
    with open(out / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _configure_logging() -> None:
    level = os.environ.get("NANOLANDER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nanolander", description="Asteroid nano-lander simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="SCENARIO")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} scenario")
        sp.add_argument("--config", required=True, type=Path, help="YAML scenario file")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.kind, args.out)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg = cfg.with_seed(args.seed)
        manifest = run(cfg, args.out)
    except (ConfigError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(manifest.summary, sort_keys=True))
    if not manifest.converged:
        print(f"warning: {args.kind} scenario did not converge", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
