"""Command-line entry point: ``python -m aliasnet <command> ...``.

Exit codes: 0 success, 2 config error, 3 data error, 4 check failure.
Config precedence is flags > JSON file > built-in defaults; every command
that writes an output directory also writes the resolved ``config.json``.
"""

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .fileio import (
    FormatError,
    export_pgm,
    load_weights,
    read_cks,
    read_manifest,
    save_checkpoint,
    write_cks,
    write_manifest,
)
from .metrics import MetricReport
from .phantom import gen_phantom, random_spec
from .rng import derive_seed
from .sampling import (
    MaskParameterError,
    gen_gaussian_mask,
    off_center_column_max,
    peak_sidelobe_ratio,
    psf,
    read_mask,
    write_mask,
)
from .solver import ModelBundle, ModelMismatchError, check_model, recon_am
from .tensor_domain import Domain
from .train import gradcheck, train

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CHECK = 0, 2, 3, 4
GRADCHECK_TOL = 1e-4
# one outer step with a tiny 2D net keeps the finite-difference sweep short
GRADCHECK_BASE = {
    "recon": {"n_p": 1, "n_f": 1, "n_d": 1, "cnn2d_depth": 2, "cnn2d_features": 4},
    "mask": {"r": 2, "acs": 1},
}

class CliError(Exception):
    def __init__(self, msg, code):
        super().__init__(msg)
        self.code = code


def _inf(v):
    return "inf" if v == float("inf") else v


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _merge(base, top):
    out = dict(base)
    for k, v in top.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def load_run_config(path=None, overrides=None, base=None):
    """Defaults (or ``base``), then the JSON file, then ``overrides``.

    ``overrides`` uses dotted keys; ``None`` values are skipped.
    """
    data = copy.deepcopy(base or {})
    if path is not None:
        try:
            top = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise CliError(f"config file not found: {path}", EXIT_CONFIG) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON ({exc})", EXIT_CONFIG) from None
        if not isinstance(top, dict):
            raise CliError(f"{path}: config root must be an object", EXIT_CONFIG)
        data = _merge(data, top)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        node = data
        *head, last = key.split(".")
        for h in head:
            node = node.setdefault(h, {})
        node[last] = val
    try:
        return RunConfig.from_dict(data)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def _mask_from(run, n, seed=None):
    m = run.mask
    seed = derive_seed(run.seed, "mask") if seed is None else seed
    try:
        return gen_gaussian_mask(n, m["r"], m["sigma"], m["acs"], seed)
    except MaskParameterError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def _read_mask(path):
    try:
        return read_mask(path)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc), EXIT_DATA) from None


def _read_cks(path):
    try:
        return read_cks(path)
    except (OSError, FormatError) as exc:
        raise CliError(str(exc), EXIT_DATA) from None


def _out_dir(path, run):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    _dump(run.to_dict(), out / "config.json")
    return out


# ---------------------------------------------------------------- commands


def cmd_mask(args):
    try:
        mask = gen_gaussian_mask(args.n, args.r, args.sigma, args.acs, args.seed)
    except MaskParameterError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    write_mask(mask, args.out)
    print(f"sampled {mask.sampled_count}/{mask.length} lines, achieved R = {mask.reduction:.4f}")
    return EXIT_OK


def cmd_psf(args):
    mask = _read_mask(args.mask)
    p = psf(mask, mask.length, args.m or mask.length)
    export_pgm(p, args.out, shift=True)
    report = {
        "peak_sidelobe_ratio": _inf(peak_sidelobe_ratio(p)),
        "off_center_column_max": off_center_column_max(p),
        "reduction": mask.reduction,
    }
    if args.report:
        _dump(report, args.report)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _model_for(run, path):
    cfg = run.recon
    if path is not None:
        try:
            model = load_weights(path)
        except (OSError, FormatError) as exc:
            raise CliError(str(exc), EXIT_DATA) from None
    elif cfg.regularizer_1d == "cnn" and (cfg.n_p or cfg.n_f) or cfg.regularizer_2d == "cnn2d":
        raise CliError("a learned configuration needs --model", EXIT_CONFIG)
    else:
        model = ModelBundle.init(cfg, run.seed)
    try:
        check_model(cfg, model)
    except ModelMismatchError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    return model


def cmd_recon(args):
    run = load_run_config(args.config, {"recon.threads": args.threads})
    y = _read_cks(args.kspace)
    if y.domain is not Domain.KSPACE:
        raise CliError(f"{args.kspace}: expected k-space, got {y.domain.name}", EXIT_DATA)
    mask = _read_mask(args.mask)
    if mask.length != y.rows:
        raise CliError(f"mask length {mask.length} does not match {y.rows} rows", EXIT_DATA)
    model = _model_for(run, args.model)
    xhat = recon_am(y, mask, run.recon, model)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_cks(xhat, out.with_suffix(".cks"))
    export_pgm(xhat, out.with_suffix(".pgm"))
    _dump(run.to_dict(), out.with_suffix(".config.json"))
    if args.reference:
        ref = _read_cks(args.reference)
        if ref.shape != xhat.shape:
            raise CliError(f"reference shape {ref.shape} does not match {xhat.shape}", EXIT_DATA)
        report = MetricReport.compute([ref.data], [xhat.data]).to_dict()
        if args.report:
            _dump(report, args.report)
        print(json.dumps({"psnr": report["psnr"], "ssim": report["ssim"]}))
    return EXIT_OK


def _load_split(manifest, split):
    try:
        items = [p for p, s in read_manifest(manifest) if s == split]
        grids = [read_cks(p) for p in items]
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"{manifest}: {exc}", EXIT_DATA) from None
    if any(g.domain is not Domain.IMAGE for g in grids):
        raise CliError(f"{manifest}: training items must be images", EXIT_DATA)
    if len({g.shape for g in grids}) > 1:
        raise CliError(f"{manifest}: items differ in shape", EXIT_DATA)
    return np.stack([g.data for g in grids]) if grids else np.zeros((0, 1, 1), complex)


def cmd_train(args):
    run = load_run_config(args.config, {
        "seed": args.seed,
        "train.seed": args.seed,
        "train.epochs": args.epochs,
        "train.learning_rate": args.lr,
        "recon.threads": args.threads,
    })
    train_x = _load_split(args.data, "train")
    val_x = _load_split(args.data, "val")
    if len(train_x) == 0 or len(val_x) == 0:
        raise CliError(f"{args.data}: need non-empty 'train' and 'val' splits", EXIT_DATA)
    out = _out_dir(args.out, run)
    mask = _mask_from(run, train_x.shape[1])
    write_mask(mask, out / "mask.txt")
    model = ModelBundle.init(run.recon, run.seed)
    try:
        res = train(train_x, val_x, mask, run.train, run.recon, model)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    last = res.history[-1] if res.history else {}
    save_checkpoint(res.model, out / "checkpoint.awt", run.to_dict(), res.best_epoch, last)
    _dump({"best_epoch": res.best_epoch, "history": res.history}, out / "history.json")
    print(f"best epoch {res.best_epoch} of {len(res.history)}")
    return EXIT_OK


def cmd_gradcheck(args):
    run = load_run_config(args.config, {"seed": args.seed}, base=GRADCHECK_BASE)
    n, m = args.rows, args.cols
    rng = np.random.default_rng(derive_seed(run.seed, "phantom"))
    x0 = rng.uniform(0, 1, (1, n, m)) * np.exp(1j * rng.uniform(-np.pi, np.pi, (1, n, m)))
    mask = _mask_from(run, n)
    model = ModelBundle.init(run.recon, run.seed)
    if not model.learned():
        raise CliError("configuration has no learned parameters", EXIT_CONFIG)
    rep = gradcheck(run.recon, run.train, x0, mask, model)
    ok = rep["max_rel_err"] <= args.tol
    rep["tolerance"] = args.tol
    rep["pass"] = ok
    print(json.dumps(rep, sort_keys=True))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_make_data(args):
    run = load_run_config(None, {"seed": args.seed, "phantom.n": args.n, "phantom.m": args.m})
    out = _out_dir(args.out, run)
    fracs = [float(t) for t in args.split.split(",")]
    if len(fracs) != 3 or min(fracs) < 0 or sum(fracs) <= 0:
        raise CliError("--split needs three non-negative fractions", EXIT_CONFIG)
    counts = np.floor(np.array(fracs) / sum(fracs) * args.count).astype(int)
    counts[0] += args.count - counts.sum()
    names = np.repeat(["train", "val", "test"], counts)
    items = []
    for j, split in enumerate(names):
        spec = random_spec(args.n, args.m, run.seed + j)
        path = f"phantom_{j:04d}.cks"
        write_cks(gen_phantom(spec), out / path)
        items.append({"path": path, "split": str(split)})
    write_manifest(items, out / "manifest.json")
    print(f"wrote {args.count} phantoms to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="aliasnet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mask", help="draw a 1D Gaussian random mask")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--sigma", type=float)
    s.add_argument("--acs", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_mask)

    s = sub.add_parser("psf", help="render a mask PSF and report sidelobes")
    s.add_argument("--mask", required=True)
    s.add_argument("--m", type=int, help="readout columns (default N)")
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.set_defaults(fn=cmd_psf)

    s = sub.add_parser("recon", help="reconstruct a k-space CKS file")
    s.add_argument("--kspace", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--model")
    s.add_argument("--config")
    s.add_argument("--out", required=True, help="output stem; writes .cks, .pgm, .config.json")
    s.add_argument("--reference")
    s.add_argument("--report")
    s.add_argument("--threads", type=int)
    s.set_defaults(fn=cmd_recon)

    s = sub.add_parser("train", help="train on a phantom manifest")
    s.add_argument("--config")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("gradcheck", help="finite-difference check of the training gradient")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--rows", type=int, default=8)
    s.add_argument("--cols", type=int, default=4)
    s.add_argument("--tol", type=float, default=GRADCHECK_TOL)
    s.set_defaults(fn=cmd_gradcheck)

    s = sub.add_parser("make-data", help="write a synthetic phantom dataset")
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--m", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--split", default="0.6,0.2,0.2")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_make_data)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
