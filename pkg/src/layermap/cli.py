"""Command line front end: ``layermap {restore,noise,estimate,sample}``.

Exit status is 0 on success, 1 on usage errors and 2 on I/O or format errors.
"""
from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import netpbm
from .bitplane import PlaneMask, decompose, merge_channels, recompose, split_channels
from .errors import FormatError, LayermapError
from .ising import estimate_image, gibbs_sample
from .netpbm import GrayImage, RgbImage
from .network import DEFAULT_SCALE
from .noise import NoiseModel, corrupt, h_from_epsilon
from .restore import (LAYERED, UNIFORM, RestoreParams, check_schedule, restore_hierarchical_stack,
                      restore_multisample_stacks, restore_stack)

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _mask(text: str) -> PlaneMask:
    try:
        return PlaneMask.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _schedule(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="layermap", description="Exact MAP restoration of images through their bit planes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("restore", help="restore a noisy PGM/PPM image")
    r.add_argument("--input", required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--beta", type=float)
    noise = r.add_mutually_exclusive_group()
    noise.add_argument("--epsilon", type=float, help="per-bit flip probability (converted to h)")
    noise.add_argument("--h", type=float, help="field strength ln((1-eps)/eps)")
    r.add_argument("--planes", type=_mask, default=PlaneMask.all(), help="8-char 0/1 mask, MSB first")
    r.add_argument("--mode", choices=("standard", "hierarchical"), default="standard")
    r.add_argument("--samples", nargs="+", default=[], metavar="PATH",
                   help="further independent observations of the same image")
    r.add_argument("--iterate", type=_schedule, metavar="A1,A2,...",
                   help="nondecreasing alpha schedule; replaces h/beta")
    r.add_argument("--weighting", choices=(UNIFORM, LAYERED), default=UNIFORM)
    r.add_argument("--scale", type=int, default=DEFAULT_SCALE)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--ascii", action="store_true", help="write P2/P3 instead of P5/P6")

    n = sub.add_parser("noise", help="flip every bit independently with probability epsilon")
    n.add_argument("--input", required=True)
    n.add_argument("--output", required=True)
    n.add_argument("--epsilon", type=float, required=True)
    n.add_argument("--seed", type=int, required=True)
    n.add_argument("--planes", type=_mask, default=PlaneMask.all())
    n.add_argument("--ascii", action="store_true")

    e = sub.add_parser("estimate", help="estimate beta and epsilon for every bit plane")
    e.add_argument("--input", required=True)

    s = sub.add_parser("sample", help="write a heat-bath Ising sample as a 0/255 PGM")
    s.add_argument("--side", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--sweeps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--ascii", action="store_true")
    return p


def _channels(img):
    if isinstance(img, RgbImage):
        return list(zip("rgb", split_channels(img)))
    return [("gray", img)]


def _assemble(template, grays):
    if isinstance(template, RgbImage):
        return merge_channels(*grays)
    return grays[0]


def _restore_params(args) -> RestoreParams:
    if args.scale <= 0:
        raise UsageError("--scale must be positive")
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if args.iterate is not None:
        alphas = check_schedule(args.iterate)
        # the schedule supplies alpha directly; beta/h only fix the first step
        return RestoreParams(beta=1.0, h=alphas[0], mask=args.planes,
                             weighting=args.weighting, scale=args.scale)
    if args.beta is None:
        raise UsageError("--beta is required (or give --iterate)")
    if args.epsilon is None and args.h is None:
        raise UsageError("one of --epsilon or --h is required")
    if args.epsilon is not None:
        if not 0.0 < args.epsilon < 0.5:
            raise UsageError(f"--epsilon must lie in (0, 0.5), got {args.epsilon}")
        h = h_from_epsilon(args.epsilon)
    else:
        h = args.h
    if not (args.beta > 0 and h > 0):
        raise UsageError("--beta and h must be positive")
    return RestoreParams(beta=args.beta, h=h, mask=args.planes, weighting=args.weighting, scale=args.scale)


def _cmd_restore(args, out) -> int:
    try:
        params = _restore_params(args)
    except (UsageError, LayermapError) as exc:
        raise UsageError(str(exc)) from None
    if args.mode == "hierarchical" and (args.samples or args.iterate):
        raise UsageError("--mode hierarchical cannot be combined with --samples or --iterate")
    if args.samples and args.iterate:
        raise UsageError("--samples cannot be combined with --iterate")
    if args.mode == "hierarchical" and not params.mask.is_prefix():
        raise UsageError(f"--mode hierarchical needs a prefix mask like 11100000, got {params.mask}")

    img = netpbm.load(args.input)
    others = [netpbm.load(p) for p in args.samples]
    for path, o in zip(args.samples, others):
        if type(o) is not type(img) or o.pixels.shape != img.pixels.shape:
            raise FormatError(f"{path}: sample does not match {args.input} in type or size")

    out.write("channel\tstep\tplane\talpha\tflow\tseconds\n")
    schedule = args.iterate or [None]
    t_total = time.perf_counter()
    restored = []
    for ci, (name, gray) in enumerate(_channels(img)):
        stack = decompose(gray)
        for step, alpha in enumerate(schedule, start=1):
            if args.samples:
                stacks = [stack] + [decompose(_channels(o)[ci][1]) for o in others]
                stack, reports = restore_multisample_stacks(stacks, params)
            elif args.mode == "hierarchical":
                stack, reports = restore_hierarchical_stack(stack, params)
            else:
                stack, reports = restore_stack(stack, params, threads=args.threads, base_alpha=alpha)
            for rep in reports:
                out.write(f"{name}\t{step}\t{rep.plane}\t{rep.alpha:.6g}\t{rep.flow}\t{rep.seconds:.3f}\n")
        restored.append(recompose(stack))
    netpbm.save(args.output, _assemble(img, restored), "ascii" if args.ascii else "binary")
    out.write(f"# total seconds {time.perf_counter() - t_total:.3f}\n")
    return EXIT_OK


def _cmd_noise(args, out) -> int:
    if not 0.0 <= args.epsilon <= 1.0:
        raise UsageError(f"--epsilon must lie in [0, 1], got {args.epsilon}")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    img = netpbm.load(args.input)
    model = NoiseModel(args.epsilon, args.seed)
    grays = [recompose(corrupt(decompose(g), model, args.planes, channel=ci))
             for ci, (_, g) in enumerate(_channels(img))]
    netpbm.save(args.output, _assemble(img, grays), "ascii" if args.ascii else "binary")
    return EXIT_OK


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


def _cmd_estimate(args, out) -> int:
    img = netpbm.load(args.input)
    color = isinstance(img, RgbImage)
    out.write("plane\tG1\tG2\tbeta_hat\tepsilon_hat\twarnings\n")
    for name, gray in _channels(img):
        for k, res in enumerate(estimate_image(gray), start=1):
            label = f"{name}{k}" if color else str(k)
            flags = ",".join(sorted(res.warnings)) or "-"
            out.write(f"{label}\t{_fmt(res.g1)}\t{_fmt(res.g2)}\t{_fmt(res.beta_hat)}\t"
                      f"{_fmt(res.epsilon_hat)}\t{flags}\n")
    return EXIT_OK


def _cmd_sample(args, out) -> int:
    if args.side < 8:
        raise UsageError("--side must be at least 8")
    if args.sweeps < 1:
        raise UsageError("--sweeps must be at least 1")
    if args.beta < 0:
        raise UsageError("--beta must be non-negative")
    plane = gibbs_sample(args.side, args.beta, args.sweeps, args.seed)
    netpbm.save(args.output, GrayImage(plane.astype(np.uint8) * 255), "ascii" if args.ascii else "binary")
    return EXIT_OK


_COMMANDS = {"restore": _cmd_restore, "noise": _cmd_noise, "estimate": _cmd_estimate, "sample": _cmd_sample}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"layermap {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"layermap {args.command}: {getattr(args, 'input', '')}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"layermap {args.command}: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
