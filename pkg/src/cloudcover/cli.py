"""Command-line pipeline: coverage, maskinfo, render, match, analyze, synth.

Logs go to stderr; machine-readable results go to stdout or to files under
the configured output directory.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import click

from .analysis import (
    BIN_MODES,
    bins_for_mode,
    trend_report,
    write_correlation_txt,
    write_trend_csv,
    write_trend_svg,
)
from .config import (
    DEFAULT_SITE_LAT,
    DEFAULT_SITE_LON,
    ConfigError,
    PipelineConfig,
    load_config,
)
from .maskgrid import (
    NORMALIZATION_MODES,
    CmgParseError,
    NoValidDataError,
    neighborhood_average,
    nearest_pixel,
    parse_cmg,
    render_mask,
)
from .matching import (
    CAMERA,
    SATELLITE,
    Catalog,
    MatchResult,
    Observation,
    build_catalog,
    match_all,
    write_pairs_csv,
    write_unmatched_csv,
)
from .skyimage import (
    DEFAULT_THRESHOLD,
    CircleRoi,
    ImageLoadError,
    NoValidPixelsError,
    cloud_coverage,
    load_sky_image,
    read_manifest,
    segment_clouds,
)
from .synth import SynthParams, generate_dataset
from .timeutil import parse_utc


def _parse_roi_text(text: str) -> CircleRoi | None:
    """'full' or 'cx,cy,r' (pixels) from a flag value."""
    if text.strip().lower() == "full":
        return None
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--roi must be 'full' or 'cx,cy,r', got {text!r}")
    try:
        cx, cy, r = (float(p) for p in parts)
    except ValueError:
        raise ValueError(f"--roi must be 'full' or 'cx,cy,r', got {text!r}") from None
    return CircleRoi(cx=cx, cy=cy, r=r)


def _parse_latlon_text(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'lat,lon', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ValueError(f"expected 'lat,lon', got {text!r}") from None


@click.group()
@click.version_option(package_name="cloudcover", prog_name="cloudcover")
def main() -> None:
    """Compare satellite cloud-mask grids with sky-camera cloud coverage."""


@main.command()
@click.argument(
    "image", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--roi",
    "roi_text",
    default="full",
    show_default=True,
    help="Sky region: 'full' or 'cx,cy,r' in pixels.",
)
@click.option(
    "--threshold",
    type=float,
    default=DEFAULT_THRESHOLD,
    show_default=True,
    help="Red/blue ratio at or above which a pixel counts as cloud.",
)
@click.option(
    "--timestamp",
    default=None,
    help="Capture time YYYY-MM-DDTHH:MM:SSZ (default: parse the filename stem).",
)
def coverage(image: Path, roi_text: str, threshold: float, timestamp: str | None) -> None:
    """Print the cloud coverage of one sky image."""
    try:
        roi = _parse_roi_text(roi_text)
        captured_at = parse_utc(timestamp) if timestamp else None
        img = load_sky_image(image, roi=roi, captured_at=captured_at)
        value = cloud_coverage(segment_clouds(img, threshold))
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"coverage={value:.2f}")


@main.command()
@click.argument(
    "grid_file",
    metavar="GRID",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--lat", type=float, default=DEFAULT_SITE_LAT, show_default=True)
@click.option("--lon", type=float, default=DEFAULT_SITE_LON, show_default=True)
@click.option(
    "--k", type=int, default=3, show_default=True, help="Odd neighborhood size in pixels."
)
@click.option(
    "--normalization",
    type=click.Choice(NORMALIZATION_MODES),
    default="linear",
    show_default=True,
)
def maskinfo(grid_file: Path, lat: float, lon: float, k: int, normalization: str) -> None:
    """Average the mask neighborhood at the site's nearest grid pixel."""
    try:
        grid = parse_cmg(grid_file)
        row, col = nearest_pixel(grid, lat, lon)
        avg = neighborhood_average(grid, row, col, k=k, normalization=normalization)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    if grid.warning_count:
        click.echo(
            f"warning: {grid.warning_count} out-of-set code(s) treated as invalid",
            err=True,
        )
    click.echo(f"center={row},{col} mean={avg.mean_cloudiness:.2f} valid={avg.valid_count}")


@main.command()
@click.argument(
    "grid_file",
    metavar="GRID",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.argument("out_file", metavar="OUT", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--marker",
    default=None,
    help="Overdraw the grid pixel nearest 'lat,lon' in bright green.",
)
def render(grid_file: Path, out_file: Path, marker: str | None) -> None:
    """Render a mask grid as a color-coded PPM image."""
    try:
        grid = parse_cmg(grid_file)
        mk = _parse_latlon_text(marker) if marker else None
        render_mask(grid, out_file, marker=mk)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {out_file}", err=True)


# shared flags for the pipeline commands; None means "keep the config value"
_PIPELINE_OPTIONS = [
    click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="Config file; flags override its values.",
    ),
    click.option(
        "--manifest",
        type=click.Path(path_type=Path),
        default=None,
        help="Camera manifest CSV (timestamp_utc,path).",
    ),
    click.option(
        "--grids",
        type=click.Path(path_type=Path),
        default=None,
        help="Directory of .cmg grid files.",
    ),
    click.option("--lat", type=float, default=None, help="Site latitude in degrees."),
    click.option("--lon", type=float, default=None, help="Site longitude in degrees."),
    click.option("--roi", "roi_text", default=None, help="'full' or 'cx,cy,r' in pixels."),
    click.option("--threshold", type=float, default=None, help="Red/blue cloud threshold."),
    click.option(
        "--normalization", type=click.Choice(NORMALIZATION_MODES), default=None
    ),
    click.option("--k", type=int, default=None, help="Odd mask neighborhood size."),
    click.option(
        "--max-delta",
        "max_delta_s",
        type=float,
        default=None,
        help="Matching window in seconds.",
    ),
    click.option("--bins", "bin_mode", type=click.Choice(BIN_MODES), default=None),
    click.option(
        "--out",
        "out_dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=None,
        help="Output directory for report files.",
    ),
]


def pipeline_options(f):
    for opt in reversed(_PIPELINE_OPTIONS):
        f = opt(f)
    return f


def _resolve_config(
    config_path: Path | None,
    manifest: Path | None,
    grids: Path | None,
    lat: float | None,
    lon: float | None,
    roi_text: str | None,
    threshold: float | None,
    normalization: str | None,
    k: int | None,
    max_delta_s: float | None,
    bin_mode: str | None,
    out_dir: Path | None,
) -> PipelineConfig:
    try:
        cfg = load_config(config_path) if config_path else PipelineConfig()
        if manifest is not None:
            cfg = replace(cfg, camera_manifest=manifest)
        if grids is not None:
            cfg = replace(cfg, grid_dir=grids)
        if lat is not None:
            cfg = replace(cfg, site_lat=lat)
        if lon is not None:
            cfg = replace(cfg, site_lon=lon)
        if roi_text is not None:
            cfg = replace(cfg, roi=_parse_roi_text(roi_text))
        if threshold is not None:
            cfg = replace(cfg, threshold=threshold)
        if normalization is not None:
            cfg = replace(cfg, normalization=normalization)
        if k is not None:
            cfg = replace(cfg, neighborhood_k=k)
        if max_delta_s is not None:
            cfg = replace(cfg, max_delta_s=max_delta_s)
        if bin_mode is not None:
            cfg = replace(cfg, bin_mode=bin_mode)
        if out_dir is not None:
            cfg = replace(cfg, out_dir=out_dir)
        cfg.validate()
    except (ConfigError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    if cfg.camera_manifest is None:
        raise click.ClickException("no camera manifest: set camera.manifest or --manifest")
    if cfg.grid_dir is None:
        raise click.ClickException("no grid directory: set grid.dir or --grids")
    return cfg


def _camera_observations(cfg: PipelineConfig) -> list[Observation]:
    observations = []
    for ts, img_path in read_manifest(cfg.camera_manifest):
        img = load_sky_image(img_path, roi=cfg.roi, captured_at=ts)
        value = cloud_coverage(segment_clouds(img, cfg.threshold))
        observations.append(
            Observation(source=CAMERA, at=ts, value=value, meta={"path": str(img_path)})
        )
    return observations


def _satellite_observations(
    cfg: PipelineConfig,
) -> tuple[list[Observation], list[tuple], list[Path]]:
    grid_files = sorted(cfg.grid_dir.glob("*.cmg"))
    observations: list[Observation] = []
    skipped: list[tuple] = []
    for path in grid_files:
        grid = parse_cmg(path)
        if grid.warning_count:
            click.echo(
                f"warning: {path.name}: {grid.warning_count} out-of-set code(s) "
                "treated as invalid",
                err=True,
            )
        row, col = nearest_pixel(grid, cfg.site_lat, cfg.site_lon)
        try:
            avg = neighborhood_average(
                grid, row, col, k=cfg.neighborhood_k, normalization=cfg.normalization
            )
        except NoValidDataError as exc:
            skipped.append((grid.observed_at, str(exc)))
            continue
        observations.append(
            Observation(
                source=SATELLITE,
                at=grid.observed_at,
                value=avg.mean_cloudiness,
                meta={"path": str(path), "valid_count": avg.valid_count},
            )
        )
    return observations, skipped, grid_files


def _run_matching(
    cfg: PipelineConfig,
) -> tuple[MatchResult, list[tuple], Catalog, list[Path]]:
    try:
        camera_obs = _camera_observations(cfg)
        satellite_obs, skipped, grid_files = _satellite_observations(cfg)
    except (ImageLoadError, NoValidPixelsError, CmgParseError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    if not grid_files:
        raise click.ClickException(f"no .cmg grids under {cfg.grid_dir}")

    camera_catalog = build_catalog(camera_obs)
    satellite_catalog = build_catalog(satellite_obs)
    for catalog, name in ((camera_catalog, "camera"), (satellite_catalog, "satellite")):
        if catalog.duplicate_count:
            click.echo(
                f"warning: dropped {catalog.duplicate_count} duplicate {name} "
                "observation(s)",
                err=True,
            )
    result = match_all(satellite_catalog, camera_catalog, cfg.max_delta_s)
    return result, skipped, camera_catalog, grid_files


def _write_match_outputs(
    cfg: PipelineConfig, result: MatchResult, skipped: list[tuple]
) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_pairs_csv(result.pairs, cfg.out_dir / "pairs.csv")
    unmatched_rows = [(obs.at, reason) for obs, reason in result.unmatched]
    unmatched_rows += [(at, reason) for at, reason in skipped]
    unmatched_rows.sort(key=lambda row: row[0])
    write_unmatched_csv(unmatched_rows, cfg.out_dir / "unmatched.csv")
    return len(unmatched_rows)


@main.command()
@pipeline_options
def match(config_path, **flags) -> None:
    """Join satellite grids to nearest camera frames; write the pair CSVs."""
    cfg = _resolve_config(config_path, **flags)
    result, skipped, _, _ = _run_matching(cfg)
    n_unmatched = _write_match_outputs(cfg, result, skipped)
    click.echo(f"n_pairs={len(result.pairs)} n_unmatched={n_unmatched}")


@main.command()
@pipeline_options
@click.option(
    "--render",
    "do_render",
    is_flag=True,
    help="Also write per-granule PPM renders with the site marked.",
)
@click.option(
    "--svg/--no-svg",
    "do_svg",
    default=True,
    show_default=True,
    help="Write the per-bin boxplot SVG.",
)
def analyze(config_path, do_render: bool, do_svg: bool, **flags) -> None:
    """Run the full pipeline and write all report artifacts."""
    cfg = _resolve_config(config_path, **flags)
    result, skipped, _, grid_files = _run_matching(cfg)
    n_unmatched = _write_match_outputs(cfg, result, skipped)

    spec = bins_for_mode(cfg.bin_mode)
    report = trend_report(result.pairs, spec)
    write_trend_csv(report, spec, cfg.out_dir / "trend.csv")
    write_correlation_txt(report, cfg.out_dir / "correlation.txt")
    if do_svg:
        write_trend_svg(report, spec, cfg.out_dir / "trend.svg")
    if report.correlation_note:
        click.echo(f"note: {report.correlation_note}", err=True)

    if do_render:
        renders_dir = cfg.out_dir / "renders"
        renders_dir.mkdir(parents=True, exist_ok=True)
        try:
            for path in grid_files:
                grid = parse_cmg(path)
                render_mask(
                    grid,
                    renders_dir / f"{path.stem}.ppm",
                    marker=(cfg.site_lat, cfg.site_lon),
                )
        except (ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    click.echo(f"n_pairs={len(result.pairs)} n_unmatched={n_unmatched}")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-granules", type=int, required=True, help="Number of overpasses to generate.")
@click.option(
    "--noise",
    type=float,
    default=0.0,
    show_default=True,
    help="Uniform +- jitter on the generated camera coverage.",
)
@click.option(
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Dataset directory to create.",
)
@click.option("--grid-size", type=int, default=5, show_default=True)
@click.option("--image-size", type=int, default=64, show_default=True)
@click.option("--invalid-prob", type=float, default=0.08, show_default=True)
def synth(
    seed: int,
    n_granules: int,
    noise: float,
    out_dir: Path,
    grid_size: int,
    image_size: int,
    invalid_prob: float,
) -> None:
    """Generate a seeded synthetic paired dataset (grids, images, manifest)."""
    try:
        params = SynthParams(
            seed=seed,
            n_granules=n_granules,
            noise=noise,
            grid_size=grid_size,
            image_size=image_size,
            invalid_prob=invalid_prob,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        config_path = generate_dataset(params, out_dir)
    except OSError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {n_granules} granule(s) under {out_dir}", err=True)
    click.echo(f"config={config_path}")


if __name__ == "__main__":
    main()
