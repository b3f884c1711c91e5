"""
Indoor-factory (InF) large-scale channel from 3GPP TR 38.901.

Path loss for LOS and the four NLOS sub-scenarios, LOS probability, and
lognormal shadow fading for the InF-SL/DL/SH/DH/HH profiles. Distances are
in meters, carrier frequency in GHz, losses in dB.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

D3D_MIN = 1.0
D3D_MAX = 600.0


class ChannelError(ValueError):
    """Invalid channel input (out-of-range distance, bad geometry)."""


class UnsupportedVariant(ChannelError):
    """Profile/state combination the model does not define (e.g. NLOS in InF-HH)."""


class InfProfile(enum.Enum):
    SL = "SL"
    DL = "DL"
    SH = "SH"
    DH = "DH"
    HH = "HH"

    @classmethod
    def parse(cls, text: str) -> "InfProfile":
        """Accept ``SL``, ``InF-SL`` or ``inf_sl`` style names."""
        key = text.strip().upper().replace("_", "-")
        if key.startswith("INF-"):
            key = key[4:]
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(f"InF-{p.value}" for p in cls)
            raise UnsupportedVariant(
                f"unknown InF profile {text!r}; valid variants: {valid}"
            ) from None

    @property
    def label(self) -> str:
        return f"InF-{self.value}"

    @property
    def dense(self) -> bool:
        return self in (InfProfile.DL, InfProfile.DH)

    @property
    def high_bs(self) -> bool:
        return self in (InfProfile.SH, InfProfile.DH, InfProfile.HH)


@dataclass(frozen=True)
class ClutterParams:
    d_clutter: float
    r: float
    h_c: float

    def __post_init__(self):
        if not self.d_clutter > 0:
            raise ChannelError(f"d_clutter must be > 0, got {self.d_clutter}")
        if not 0 < self.r < 1:
            raise ChannelError(f"clutter density r must be in (0, 1), got {self.r}")
        if not self.h_c > 0:
            raise ChannelError(f"clutter height h_c must be > 0, got {self.h_c}")


@dataclass(frozen=True)
class NodeGeometry:
    h_bs: float
    h_ut: float

    def __post_init__(self):
        if not self.h_bs > 0:
            raise ChannelError(f"h_bs must be > 0, got {self.h_bs}")
        if not self.h_ut > 0:
            raise ChannelError(f"h_ut must be > 0, got {self.h_ut}")


@dataclass(frozen=True)
class LinkSample:
    d_2d: float
    d_3d: float
    f_c: float
    is_los: bool
    path_loss: float
    shadow_fading: float

    @property
    def total_loss(self) -> float:
        return self.path_loss + self.shadow_fading


SPARSE_CLUTTER = ClutterParams(d_clutter=10.0, r=0.2, h_c=2.0)
DENSE_CLUTTER = ClutterParams(d_clutter=2.0, r=0.6, h_c=6.0)
H_UT_DEFAULT = 1.5


def default_clutter(profile: InfProfile) -> ClutterParams:
    return DENSE_CLUTTER if profile.dense else SPARSE_CLUTTER


def default_geometry(profile: InfProfile) -> NodeGeometry:
    return NodeGeometry(h_bs=8.0 if profile.high_bs else 1.5, h_ut=H_UT_DEFAULT)


def _check_distance(d_3d: float, lenient: bool) -> float:
    if D3D_MIN <= d_3d <= D3D_MAX:
        return d_3d
    if not lenient:
        raise ChannelError(
            f"d_3D={d_3d} m outside the valid range [{D3D_MIN}, {D3D_MAX}] m"
        )
    clamped = min(max(d_3d, D3D_MIN), D3D_MAX)
    logger.warning("d_3D=%g m out of range, clamped to %g m", d_3d, clamped)
    return clamped


def _check_freq(f_c: float) -> None:
    if not f_c > 0:
        raise ChannelError(f"carrier frequency must be > 0 GHz, got {f_c}")


def path_loss_los(d_3d: float, f_c: float, lenient: bool = False) -> float:
    """LOS path loss in dB, valid for 1 <= d_3d <= 600 m."""
    _check_freq(f_c)
    d = _check_distance(d_3d, lenient)
    return 31.84 + 21.5 * math.log10(d) + 19.0 * math.log10(f_c)


# (intercept, distance slope) of the raw NLOS law; frequency slope is 20 for all
_NLOS_COEFFS = {
    InfProfile.SL: (33.0, 25.5),
    InfProfile.DL: (18.6, 35.7),
    InfProfile.SH: (32.4, 23.0),
    InfProfile.DH: (33.63, 21.9),
}


def _nlos_raw(profile: InfProfile, d: float, f_c: float) -> float:
    a, b = _NLOS_COEFFS[profile]
    return a + b * math.log10(d) + 20.0 * math.log10(f_c)


def path_loss_nlos(
    profile: InfProfile, d_3d: float, f_c: float, lenient: bool = False
) -> float:
    """NLOS path loss in dB.

    Each sub-scenario is floored at the LOS loss; InF-DL is additionally
    floored at the InF-SL NLOS loss.
    """
    if profile is InfProfile.HH:
        raise UnsupportedVariant("InF-HH has no NLOS path loss model")
    _check_freq(f_c)
    d = _check_distance(d_3d, lenient)
    pl_los = path_loss_los(d, f_c)
    pl_sl = max(_nlos_raw(InfProfile.SL, d, f_c), pl_los)
    if profile is InfProfile.SL:
        return pl_sl
    if profile is InfProfile.DL:
        return max(_nlos_raw(InfProfile.DL, d, f_c), pl_los, pl_sl)
    return max(_nlos_raw(profile, d, f_c), pl_los)


_SIGMA_NLOS = {
    InfProfile.SL: 5.7,
    InfProfile.DL: 7.2,
    InfProfile.SH: 5.9,
    InfProfile.DH: 4.0,
}
SIGMA_LOS = 4.0


def sigma_sf(profile: InfProfile, is_los: bool) -> float:
    """Shadow-fading standard deviation in dB."""
    if is_los:
        return SIGMA_LOS
    if profile is InfProfile.HH:
        raise UnsupportedVariant("InF-HH has no NLOS shadow fading")
    return _SIGMA_NLOS[profile]


def k_subsec(profile: InfProfile, clutter: ClutterParams, geom: NodeGeometry) -> float:
    """Clutter-dependent decay distance (m) of the LOS probability."""
    if not 0 < clutter.r < 1:
        raise ChannelError(f"clutter density r must be in (0, 1), got {clutter.r}")
    k = -clutter.d_clutter / math.log(1.0 - clutter.r)
    if profile in (InfProfile.SL, InfProfile.DL):
        return k
    if profile in (InfProfile.SH, InfProfile.DH):
        if not geom.h_bs > geom.h_ut:
            raise ChannelError(
                f"{profile.label} needs h_bs > h_ut (got {geom.h_bs}, {geom.h_ut})"
            )
        if not clutter.h_c > geom.h_ut:
            raise ChannelError(
                f"{profile.label} needs h_c > h_ut (got {clutter.h_c}, {geom.h_ut})"
            )
        return k * (geom.h_bs - geom.h_ut) / (clutter.h_c - geom.h_ut)
    raise UnsupportedVariant("InF-HH has no clutter decay distance")


def los_probability(
    profile: InfProfile, d_2d: float, clutter: ClutterParams, geom: NodeGeometry
) -> float:
    if d_2d < 0:
        raise ChannelError(f"d_2D must be >= 0, got {d_2d}")
    if profile is InfProfile.HH:
        return 1.0
    return math.exp(-d_2d / k_subsec(profile, clutter, geom))


def sample_link(
    profile: InfProfile,
    d_2d: float,
    d_3d: float,
    f_c: float,
    clutter: ClutterParams,
    geom: NodeGeometry,
    rng: np.random.Generator,
    lenient: bool = False,
) -> LinkSample:
    """Draw one LOS state and shadow-fading value.

    Always consumes exactly two draws from ``rng`` (uniform, then standard
    normal) so stream alignment does not depend on the outcome.
    """
    p_los = los_probability(profile, d_2d, clutter, geom)
    u = rng.random()
    z = rng.standard_normal()
    is_los = bool(u < p_los)
    d = _check_distance(d_3d, lenient)
    if is_los:
        pl = path_loss_los(d, f_c)
    else:
        pl = path_loss_nlos(profile, d, f_c)
    sf = sigma_sf(profile, is_los) * float(z)
    return LinkSample(
        d_2d=d_2d, d_3d=d_3d, f_c=f_c, is_los=is_los, path_loss=pl, shadow_fading=sf
    )


CHANNEL_EVAL_COLUMNS = ("profile", "d_2D", "d_3D", "f_c", "pl_los_db", "pl_nlos_db", "p_los")


def channel_eval_rows(
    profiles,
    distances,
    f_c: float,
    h_bs: float | None = None,
    h_ut: float = H_UT_DEFAULT,
    lenient: bool = False,
):
    """Deterministic rows for the channel-eval dump.

    ``distances`` are 2D distances; d_3D adds the antenna height difference.
    The NLOS column is empty for InF-HH.
    """
    rows = []
    for profile in profiles:
        clutter = default_clutter(profile)
        geom = default_geometry(profile)
        if h_bs is not None:
            geom = NodeGeometry(h_bs=h_bs, h_ut=h_ut)
        elif h_ut != geom.h_ut:
            geom = NodeGeometry(h_bs=geom.h_bs, h_ut=h_ut)
        for d_2d in distances:
            d_3d = math.hypot(d_2d, geom.h_bs - geom.h_ut)
            d_3d = _check_distance(d_3d, lenient)
            pl_los = path_loss_los(d_3d, f_c)
            pl_nlos = None if profile is InfProfile.HH else path_loss_nlos(profile, d_3d, f_c)
            rows.append(
                (
                    profile.label,
                    f"{d_2d:.6f}",
                    f"{d_3d:.6f}",
                    f"{f_c:.6f}",
                    f"{pl_los:.6f}",
                    "" if pl_nlos is None else f"{pl_nlos:.6f}",
                    f"{los_probability(profile, d_2d, clutter, geom):.6f}",
                )
            )
    return rows
