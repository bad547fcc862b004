"""INI run-configuration parsing.

Configs are key-value INI files with nested sections (dotted names).
Units are SI throughout: seconds, Hz, volts. The repo's ``configs/``
directory ships annotated examples for the dataset1-like and dataset2-like
presets and a desk-scale training run. Spectral-shape triples are written
``center_hz:gain:decay_hz`` separated by commas; band lists are
``lo_hz:hi_hz`` pairs.
"""

from __future__ import annotations

import configparser
from dataclasses import fields

from .errors import ConfigError
from .gan import GanConfig
from .report import EvalParams
from .synth import (
    FreshConfig,
    PscgmConfig,
    RegionSpec,
    SpectralPeak,
    dataset1_like_config,
    dataset2_like_config,
    desk_fresh_config,
)

__all__ = [
    "load_ini",
    "preset_config",
    "parse_synth_model",
    "parse_gan_config",
    "parse_eval_params",
    "PRESETS",
]

PRESETS = {
    "dataset1-like": dataset1_like_config,
    "dataset2-like": dataset2_like_config,
    "desk-fresh": desk_fresh_config,
}


def load_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return cp


def preset_config(name: str):
    """A synthesis config by preset name; ConfigError lists valid names."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; valid presets: {sorted(PRESETS)}"
        ) from None


def _section(cp: configparser.ConfigParser, name: str) -> configparser.SectionProxy:
    if not cp.has_section(name):
        raise ConfigError(f"missing [{name}] section")
    return cp[name]


def _triples(text: str) -> tuple[tuple[float, float, float], ...]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigError(f"expected center:gain:decay, got {chunk!r}")
        out.append(tuple(float(p) for p in parts))
    return tuple(out)


def parse_synth_model(cp: configparser.ConfigParser, model: str):
    """Build a FreshConfig or PscgmConfig from [synth.fresh] / [synth.pscgm]."""
    if model == "fresh":
        sec = _section(cp, "synth.fresh")
        peaks = []
        for i in (1, 2):
            p = _section(cp, f"synth.fresh.peak{i}")
            peaks.append(SpectralPeak(
                f0_hz=p.getfloat("f0_hz"),
                amplitude=p.getfloat("amplitude"),
                decay_left_hz=p.getfloat("decay_left_hz"),
                decay_right_hz=p.getfloat("decay_right_hz"),
            ))
        return FreshConfig(
            cycle_period_s=sec.getfloat("cycle_period_s"),
            spectral_peaks=tuple(peaks),
            temporal_center_frac=sec.getfloat("temporal_center_frac"),
            temporal_decay_s=sec.getfloat("temporal_decay_s"),
            sample_rate_hz=sec.getfloat("sample_rate_hz"),
            random_phase=sec.getboolean("random_phase", fallback=False),
        )
    if model == "pscgm":
        sec = _section(cp, "synth.pscgm")
        regions = []
        for i in (1, 2, 3):
            name = f"synth.pscgm.region{i}"
            if not cp.has_section(name):
                continue
            r = cp[name]
            regions.append(RegionSpec(
                duration_s=r.getfloat("duration_s"),
                psd_shape=_triples(r.get("psd_shape", "")),
                rms_volts=r.getfloat("rms_volts"),
            ))
        return PscgmConfig(
            cycle_period_s=sec.getfloat("cycle_period_s"),
            regions=tuple(regions),
            sample_rate_hz=sec.getfloat("sample_rate_hz"),
            random_phase=sec.getboolean("random_phase", fallback=False),
        )
    raise ConfigError(f"unknown model {model!r}; valid models: ['fresh', 'pscgm']")


_GAN_FIELDS = {f.name: f.type for f in fields(GanConfig)}


def parse_gan_config(cp: configparser.ConfigParser,
                     section: str = "train") -> GanConfig:
    """GanConfig from a [train] section; unknown keys are config errors."""
    sec = _section(cp, section)
    kwargs = {}
    passthrough = {"data", "resume", "checkpoints", "log"}
    for key in sec:
        if key in passthrough:
            continue
        if key not in _GAN_FIELDS:
            raise ConfigError(f"unknown [{section}] key {key!r}")
        ftype = _GAN_FIELDS[key]
        if ftype in ("int", int):
            kwargs[key] = sec.getint(key)
        elif ftype in ("float", float):
            kwargs[key] = sec.getfloat(key)
        else:
            kwargs[key] = sec.get(key)
    try:
        return GanConfig(**kwargs)
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"bad [{section}] section: {exc}") from exc


def _bands(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(f"expected lo:hi, got {chunk!r}")
        out.append((float(parts[0]), float(parts[1])))
    return tuple(out)


def parse_eval_params(cp: configparser.ConfigParser,
                      section: str = "evaluate") -> EvalParams:
    if not cp.has_section(section):
        return EvalParams()
    sec = cp[section]
    kwargs = {}
    if "fundamental_hz" in sec:
        kwargs["fundamental_hz"] = sec.getfloat("fundamental_hz")
    if "n_harmonics" in sec:
        kwargs["n_harmonics"] = sec.getint("n_harmonics")
    if "thresh" in sec:
        kwargs["thresh"] = sec.getfloat("thresh")
    if "f_lo" in sec or "f_hi" in sec:
        kwargs["f_range"] = (sec.getfloat("f_lo", fallback=0.0),
                             sec.getfloat("f_hi", fallback=200e3))
    if "nfft" in sec:
        kwargs["nfft"] = sec.getint("nfft")
    if "bands" in sec:
        kwargs["bands"] = _bands(sec.get("bands"))
    if "fid_space" in sec:
        kwargs["fid_space"] = sec.get("fid_space")
    if "error_harmonics" in sec:
        kwargs["error_harmonics"] = sec.getint("error_harmonics")
    if "peak_thresh_volts" in sec:
        kwargs["peak_thresh_volts"] = sec.getfloat("peak_thresh_volts")
    return EvalParams(**kwargs)
