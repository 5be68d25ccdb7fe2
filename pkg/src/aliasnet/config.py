"""Configuration dataclasses and strict JSON (de)serialisation."""

from dataclasses import asdict, dataclass, field, fields


class ConfigError(ValueError):
    pass


def _from_dict(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class ReconConfig:
    n_p: int = 1
    n_f: int = 5
    n_d: int = 5
    sharing: str = "shared"
    regularizer_1d: str = "cnn"  # "cnn" | "tv"
    tv_lambda: float = 0.05
    regularizer_2d: str = "cnn2d"  # "cnn2d" | "tv2d" | "none"
    tv2d_lambda: float = 0.02
    cnn2d_depth: int = 5
    cnn2d_features: int = 32
    dc_mode: str = "hard"
    threads: int = 1

    def __post_init__(self):
        for name in ("n_p", "n_f", "n_d"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.sharing not in ("shared", "unshared"):
            raise ValueError(f"sharing must be 'shared' or 'unshared', got {self.sharing!r}")
        if self.regularizer_1d not in ("cnn", "tv"):
            raise ValueError(f"regularizer_1d must be 'cnn' or 'tv', got {self.regularizer_1d!r}")
        if self.regularizer_2d not in ("cnn2d", "tv2d", "none"):
            raise ValueError(f"unknown regularizer_2d {self.regularizer_2d!r}")
        if self.dc_mode != "hard":
            raise ValueError("only hard data consistency is supported")
        if self.regularizer_1d == "tv" and self.tv_lambda <= 0:
            raise ValueError("tv_lambda must be positive")

    def modules_per_block(self, n):
        """Number of distinct 1D modules for a sweep with ``n`` iterations."""
        return n if self.sharing == "shared" else n * self.n_d


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 10
    epochs: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tau_k: float = 0.1
    tau_p: float = 0.3
    tau_f: float = 0.3
    seed: int = 0
    rho_min: float = 1e-6

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if min(self.tau_k, self.tau_p, self.tau_f, self.rho_min) < 0:
            raise ValueError("loss weights and rho_min must be non-negative")


@dataclass
class PhantomSpec:
    n: int = 64
    m: int = 64
    ellipses: list = field(default_factory=list)  # dicts: center, axes, angle, intensity
    plateaus: int = 0
    phase_mode: str = "real"  # "real" | "smooth_phase"
    seed: int = 0

    def __post_init__(self):
        if self.n < 8 or self.m < 8:
            raise ValueError("phantoms need N, M >= 8")
        if self.phase_mode not in ("real", "smooth_phase"):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")


@dataclass
class RunConfig:
    recon: ReconConfig = field(default_factory=ReconConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    paths: dict = field(default_factory=dict)
    seed: int = 0
    mask: dict = field(default_factory=lambda: {"r": 4.0, "sigma": None, "acs": None})
    noise_sigma: float = 0.0

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"config: unknown keys {sorted(unknown)}")
        kw = dict(data)
        if "recon" in kw:
            kw["recon"] = _from_dict(ReconConfig, kw["recon"], "recon")
        if "train" in kw:
            kw["train"] = _from_dict(TrainConfig, kw["train"], "train")
        if "phantom" in kw:
            kw["phantom"] = _from_dict(PhantomSpec, kw["phantom"], "phantom")
        if "mask" in kw:
            mask = {"r": 4.0, "sigma": None, "acs": None}
            extra = set(kw["mask"]) - set(mask)
            if extra:
                raise ConfigError(f"mask: unknown keys {sorted(extra)}")
            mask.update(kw["mask"])
            kw["mask"] = mask
        return cls(**kw)

    def to_dict(self):
        return asdict(self)
