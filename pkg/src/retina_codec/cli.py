"""Command-line front end: ``retina-codec {encode,decode,sweep,luts,config}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import CodecConfig, ConfigError, StreamError, deserialize, get_codec, serialize
from .dynamics import LutError
from .metrics import RateQuality, csv_header, csv_row, entropy_bpp, mean_ssim, psnr
from .pgm import PgmError, read_pgm, write_pgm
from .testimages import KINDS, synthetic


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    input: Path | None
    config: Path | None
    outputs: list[Path]
    seed: int = 0


def _load_image(spec: str, config: CodecConfig, seed: int) -> np.ndarray:
    path = Path(spec)
    if not path.exists() and spec in KINDS:
        return synthetic(spec, config.N, seed)
    if not path.is_file():
        raise CliError(f"input image {spec} not found (or use one of: {', '.join(KINDS)})")
    img = read_pgm(path)
    h, w = img.shape
    if h != w or h & (h - 1) or h < 8:
        raise CliError(f"{spec}: {w}x{h} image; side must be power of two (square, >= 8)")
    if h != config.N:
        raise CliError(f"{spec}: side {h} does not match configured N={config.N}")
    return img


def _ms_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"--tlist must be comma-separated milliseconds, got {text!r}") from None
    if not vals:
        raise CliError("--tlist is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise CliError("--tlist must be strictly ascending")
    return vals


def _prepare(manifest: RunManifest) -> None:
    for out in manifest.outputs:
        if not out.parent.exists():
            raise CliError(f"output directory {out.parent} does not exist")


def cmd_encode(args) -> int:
    config = CodecConfig.load(args.config)
    manifest = RunManifest("encode", Path(args.image), Path(args.config), [Path(args.out)], args.seed)
    _prepare(manifest)
    image = _load_image(args.image, config, args.seed)
    t_obs = config.t_obs if args.tobs is None else args.tobs * 1e-3
    enc = get_codec(config).encode(image, t_obs)
    data = serialize(enc)
    Path(args.out).write_bytes(data)
    print("t_obs_ms,bpp,raw_bytes")
    print(f"{enc.t_obs * 1e3:g},{entropy_bpp(enc):.6f},{len(data)}")
    return 0


def cmd_decode(args) -> int:
    config = CodecConfig.load(args.config)
    manifest = RunManifest("decode", Path(args.stream), Path(args.config), [Path(args.out)])
    _prepare(manifest)
    enc = deserialize(Path(args.stream).read_bytes())
    write_pgm(args.out, get_codec(config).decode(enc))
    return 0


def cmd_sweep(args) -> int:
    config = CodecConfig.load(args.config)
    times = _ms_list(args.tlist)
    outdir = Path(args.outdir) if args.outdir else None
    manifest = RunManifest("sweep", Path(args.image), Path(args.config), [Path(args.out)], args.seed)
    _prepare(manifest)
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    image = _load_image(args.image, config, args.seed)
    codec = get_codec(config)
    rows = [csv_header()]
    for t_ms in times:
        enc = codec.encode(image, t_ms * 1e-3)
        rec = np.clip(codec.decode(enc), 0.0, 1.0)
        rq = RateQuality(enc.t_obs, entropy_bpp(enc), psnr(image, rec), mean_ssim(image, rec))
        rows.append(csv_row(rq))
        print(rows[-1], flush=True)
        if outdir is not None:
            write_pgm(outdir / f"recon_{t_ms:g}ms.pgm", rec)
    Path(args.out).write_text("\n".join(rows) + "\n")
    return 0


def cmd_luts(args) -> int:
    config = CodecConfig.load(args.config)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    codec = get_codec(config)
    for k, lut in enumerate(codec.cg_luts):
        (out / f"fg_band{k}_t{lut.t * 1e3:g}ms.csv").write_text(lut.to_csv())
    for d in config.lut.export_durations:
        lut = codec.lif_lut(0, d)
        (out / f"fn_d{d * 1e3:g}ms.csv").write_text(lut.to_csv())
    return 0


def cmd_config(args) -> int:
    text = CodecConfig.default(args.size).to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="retina-codec", description="Time-scalable retina-inspired image codec")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="encode a PGM image into a spike-count stream")
    e.add_argument("image", help=f"P5 PGM path, or a synthetic image: {', '.join(KINDS)}")
    e.add_argument("--config", required=True)
    e.add_argument("--tobs", type=float, help="observation time in ms (default: config t_obs)")
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode a stream into a PGM image")
    d.add_argument("stream")
    d.add_argument("--config", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("sweep", help="encode/decode over several observation times, write metrics CSV")
    s.add_argument("image")
    s.add_argument("--config", required=True)
    s.add_argument("--tlist", default="20,30,40,50", help="ascending ms list")
    s.add_argument("--out", required=True, help="CSV path")
    s.add_argument("--outdir", help="directory for reconstructed images")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sweep)

    lt = sub.add_parser("luts", help="export the inner-layer and LIF maps as CSV")
    lt.add_argument("--config", required=True)
    lt.add_argument("--outdir", required=True)
    lt.set_defaults(func=cmd_luts)

    c = sub.add_parser("config", help="print or write the default configuration")
    c.add_argument("--size", type=int, default=256)
    c.add_argument("--out")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, StreamError, PgmError, LutError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
