"""Ablation wiring switches"""

from typing import Literal

from pydantic import BaseModel, ConfigDict

ViewMode = Literal["full", "only_close", "only_remote"]
ExchangeMode = Literal["bidirectional", "remote2close", "close2remote", "none"]
FusionVariant = Literal["cvwin", "pwam_stub", "iim_stub", "direct_sum", "no_gate"]
DecoderTruncate = Literal["none", "d4", "d4d3", "d4d3d2"]
DecoderVariant = Literal["cdad", "arc"]

PRESETS: dict[str, dict[str, object]] = {
    "full": {},
    "only_close": {"view_mode": "only_close", "exchange_mode": "none"},
    "only_remote": {"view_mode": "only_remote", "exchange_mode": "none"},
    "only_remote2close": {"exchange_mode": "remote2close"},
    "only_close2remote": {"exchange_mode": "close2remote"},
    "pwam_stub": {"cvwin_variant": "pwam_stub"},
    "iim_stub": {"cvwin_variant": "iim_stub"},
    "direct_sum": {"cvwin_variant": "direct_sum"},
    "no_gate": {"cvwin_variant": "no_gate"},
    "arc": {"decoder_variant": "arc"},
    "no_cda": {"cda_enabled": False},
    "no_skip": {"skip_enabled": False},
    "-d4": {"decoder_truncate": "d4"},
    "-d4d3": {"decoder_truncate": "d4d3"},
    "-d4d3d2": {"decoder_truncate": "d4d3d2"},
}


class AblationSwitches(BaseModel):
    """One value per ablation axis; the defaults are the full model"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    view_mode: ViewMode = "full"
    exchange_mode: ExchangeMode = "bidirectional"
    cvwin_variant: FusionVariant = "cvwin"
    decoder_truncate: DecoderTruncate = "none"
    decoder_variant: DecoderVariant = "cdad"
    cda_enabled: bool = True
    skip_enabled: bool = True

    @classmethod
    def preset(cls, name: str) -> "AblationSwitches":
        """Build the switches of a named variant"""
        if name not in PRESETS:
            raise ValueError(f"unknown variant '{name}', choose from {sorted(PRESETS)}")
        return cls.model_validate(PRESETS[name])

    @property
    def uses_remote(self) -> bool:
        return self.view_mode != "only_close"

    @property
    def uses_close(self) -> bool:
        return self.view_mode != "only_remote"

    @property
    def num_decoder_steps(self) -> int:
        """How many of D_2..D_4 are computed"""
        return {"none": 3, "d4": 2, "d4d3": 1, "d4d3d2": 0}[self.decoder_truncate]
