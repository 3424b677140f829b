"""Experiment runner: seeded benchmark protocol with CSV/JSON reports.

For every seed the harness draws the dataset, generates complementary labels
from the (possibly noise-mixed) transition matrix, splits off a validation
share, trains one model per grid value, selects the best by the validation
metric, and scores the selected model's decoded predictions on held-out test
data. All randomness derives from the seed alone, never from the method, so
every method sees identical data within a seed.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import (
    LabeledDataset,
    SplitPair,
    load_idx_pair,
    make_gaussian_blobs,
    split_train_validation,
    synthesize_complementary,
)
from .decode import decode_l1, decode_max
from .estimators import KnnCPEClassifier
from .models import (
    BaseSpec,
    FixedTransitionMode,
    IdentityMode,
    SoftmaxComplementMode,
    TrainableTransitionMode,
    TrainConfig,
    train,
)
from .transition import TransitionMatrix, biased_transition, mix_uniform_noise, uniform_transition
from .validate import empirical_zero_one, scel_validate, select_model, ure_zero_one

METHODS = ("cpe-i", "cpe-f", "cpe-t", "fwd-max", "scl", "dm", "knn")
TRANSITIONS = ("uniform", "weak", "strong")
DEFAULT_LR_GRID = (1e-3, 5e-4, 1e-4, 5e-5, 1e-5)
DEFAULT_NEIGHBOR_GRID = tuple(range(10, 251, 10))
BIASED_TRIPLES = {
    "strong": (0.75 / 3, 0.24 / 3, 0.01 / 3),
    "weak": (0.45 / 3, 0.30 / 3, 0.25 / 3),
}


class ConfigError(ValueError):
    """Invalid or incompatible experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "blobs"
    k: int = 3
    d: int = 8
    n_per_class: int = 500
    test_n_per_class: int = 500
    separation: float = 8.0
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    subset: int = 0  # cap on training samples for idx datasets; 0 keeps all
    transition: str = "uniform"
    noise_lambda: float = 0.0
    method: str = "cpe-f"
    decoder: str = "l1"
    base: str = "linear"
    width: int = 64
    lr_grid: tuple = DEFAULT_LR_GRID
    neighbor_grid: tuple = DEFAULT_NEIGHBOR_GRID
    epochs: int = 30
    batch_size: int = 256
    seeds: tuple = (0, 1, 2, 3, 4)
    validation_metric: str = "scel"
    validation_fraction: float = 0.1


@dataclass
class CellResult:
    """One (seed, grid value) training cell. For knn the `lr` column holds
    the neighbor count instead of a learning rate."""

    seed: int
    lr: float
    val_metric: float
    test_accuracy: float
    train_curve: list = field(default_factory=list)
    val_curve: list = field(default_factory=list)


@dataclass
class SelectedResult:
    seed: int
    lr: float
    test_accuracy: float


@dataclass
class ExperimentReport:
    method: str
    transition: str
    noise_lambda: float
    validation_metric: str
    cells: list = field(default_factory=list)
    selected: list = field(default_factory=list)
    mean_accuracy: float = float("nan")
    std_accuracy: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        report = cls(
            method=d["method"],
            transition=d["transition"],
            noise_lambda=d["noise_lambda"],
            validation_metric=d["validation_metric"],
            mean_accuracy=d["mean_accuracy"],
            std_accuracy=d["std_accuracy"],
        )
        report.cells = [CellResult(**c) for c in d["cells"]]
        report.selected = [SelectedResult(**s) for s in d["selected"]]
        return report


def validate_config(config: ExperimentConfig) -> None:
    """Reject incompatible configurations before any training happens."""
    import os

    if config.dataset not in ("blobs", "idx"):
        raise ConfigError(f"unknown dataset {config.dataset!r}")
    if config.method not in METHODS:
        raise ConfigError(f"unknown method {config.method!r}")
    if config.transition not in TRANSITIONS and not os.path.exists(config.transition):
        raise ConfigError(
            f"transition must be one of {TRANSITIONS} or a matrix file, "
            f"got {config.transition!r}"
        )
    if config.decoder not in ("l1", "max"):
        raise ConfigError(f"unknown decoder {config.decoder!r}")
    if not 0.0 <= config.noise_lambda <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {config.noise_lambda}")
    if config.transition in BIASED_TRIPLES and (config.k - 1) % 3 != 0:
        raise ConfigError(
            f"biased transitions need k-1 divisible by 3, got k={config.k}"
        )
    if config.method in ("knn", "scl", "dm") and config.decoder != "l1":
        raise ConfigError(f"method {config.method} decodes with l1 only")
    if config.method == "fwd-max" and config.decoder != "max":
        raise ConfigError("method fwd-max decodes with max by definition")
    if config.base not in ("linear", "mlp"):
        raise ConfigError(f"unknown base model {config.base!r}")
    if config.validation_metric not in ("scel", "ure"):
        raise ConfigError(f"unknown validation metric {config.validation_metric!r}")
    if not config.seeds:
        raise ConfigError("need at least one seed")


@dataclass(frozen=True)
class SeedData:
    split: SplitPair
    test: LabeledDataset
    provided: TransitionMatrix
    generating: TransitionMatrix


def _provided_matrix(config, rng) -> TransitionMatrix:
    if config.transition == "uniform":
        return uniform_transition(config.k)
    if config.transition in BIASED_TRIPLES:
        return biased_transition(config.k, *BIASED_TRIPLES[config.transition],
                                 rng=rng)
    t = TransitionMatrix.load(config.transition)
    if t.k != config.k:
        raise ConfigError(
            f"matrix file has {t.k} classes but the config says {config.k}"
        )
    return t


def prepare_seed_data(config: ExperimentConfig, seed: int) -> SeedData:
    """Everything a method consumes for one seed; depends only on the
    dataset/transition part of the config plus the seed."""
    streams = np.random.SeedSequence([int(seed)]).spawn(5)
    rng_matrix, rng_train, rng_test, rng_labels, rng_split = map(
        np.random.default_rng, streams
    )
    provided = _provided_matrix(config, rng_matrix)
    generating = mix_uniform_noise(provided, config.noise_lambda)
    if config.dataset == "blobs":
        train_data = make_gaussian_blobs(
            config.k, config.d, config.n_per_class, config.separation, rng_train
        )
        test_data = make_gaussian_blobs(
            config.k, config.d, config.test_n_per_class, config.separation, rng_test
        )
    else:
        train_data = load_idx_pair(config.train_images, config.train_labels)
        test_data = load_idx_pair(config.test_images, config.test_labels)
        if config.subset:
            train_data = LabeledDataset(
                features=train_data.features[: config.subset],
                labels=train_data.labels[: config.subset],
                k=train_data.k,
            )
    comp = synthesize_complementary(train_data, generating, rng_labels)
    split = split_train_validation(comp, config.validation_fraction, rng_split)
    return SeedData(split=split, test=test_data, provided=provided,
                    generating=generating)


def _decode_matrix(config, provided) -> TransitionMatrix:
    # scl and dm assume uniform generation no matter what produced the labels
    if config.method in ("scl", "dm"):
        return uniform_transition(provided.k)
    return provided


def _make_mode(config, decode_t):
    if config.method == "cpe-i":
        return IdentityMode()
    if config.method in ("cpe-f", "fwd-max", "scl"):
        return FixedTransitionMode(decode_t)
    if config.method == "cpe-t":
        return TrainableTransitionMode.from_transition(decode_t)
    if config.method == "dm":
        return SoftmaxComplementMode()
    raise ConfigError(f"method {config.method!r} has no gradient mode")


def _cell_seed(seed: int, grid_index: int) -> int:
    return int(np.random.SeedSequence([int(seed), 101, grid_index]).generate_state(1)[0])


def _validation_value(config, estimator, data: SeedData, decode_t, decode):
    if config.validation_metric == "scel":
        return scel_validate(estimator, data.split.validation)
    preds = decode(estimator.predict_proba(data.split.validation.features), decode_t)
    return ure_zero_one(preds, data.split.validation, decode_t)


def _run_seed(config: ExperimentConfig, seed: int, data: SeedData) -> list:
    decode_t = _decode_matrix(config, data.provided)
    decode = decode_l1 if config.decoder == "l1" else decode_max
    cells = []
    if config.method == "knn":
        n_train = data.split.train.n
        grid = [n for n in config.neighbor_grid if n <= n_train]
        if not grid:
            raise ConfigError("neighbor grid exceeds the training set size")
        for n_nb in grid:
            est = KnnCPEClassifier(
                transition=decode_t, n_neighbors=n_nb
            ).fit(data.split.train.features, data.split.train.complementary_labels)
            val = _validation_value(config, est, data, decode_t, decode)
            preds = decode(est.predict_proba(data.test.features), decode_t)
            acc = 1.0 - empirical_zero_one(preds, data.test.labels)
            cells.append(CellResult(seed=seed, lr=float(n_nb), val_metric=val,
                                    test_accuracy=acc))
        return cells
    spec = BaseSpec(kind=config.base, hidden=config.width)
    for i, lr in enumerate(config.lr_grid):
        tc = TrainConfig(
            learning_rate=lr,
            epochs=config.epochs,
            batch_size=config.batch_size,
            seed=_cell_seed(seed, i),
        )
        est = train(spec, _make_mode(config, decode_t), data.split, tc)
        val = _validation_value(config, est, data, decode_t, decode)
        preds = decode(est.predict_proba(data.test.features), decode_t)
        acc = 1.0 - empirical_zero_one(preds, data.test.labels)
        cells.append(CellResult(
            seed=seed, lr=lr, val_metric=val, test_accuracy=acc,
            train_curve=list(est.curves.train_scel),
            val_curve=list(est.curves.val_scel),
        ))
    return cells


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    validate_config(config)
    probe = prepare_seed_data(config, int(config.seeds[0]))
    if config.decoder == "max" or config.validation_metric == "ure":
        effective = _decode_matrix(config, probe.provided)
        if not effective.geometry.invertible:
            raise ConfigError(
                "max decoding and URE validation need an invertible transition matrix"
            )
    report = ExperimentReport(
        method=config.method,
        transition=config.transition,
        noise_lambda=config.noise_lambda,
        validation_metric=config.validation_metric,
    )
    for seed in config.seeds:
        seed = int(seed)
        data = probe if seed == int(config.seeds[0]) else prepare_seed_data(config, seed)
        cells = _run_seed(config, seed, data)
        report.cells.extend(cells)
        best_lr = select_model([(c.lr, c.val_metric) for c in cells])
        best = next(c for c in cells if c.lr == best_lr)
        report.selected.append(SelectedResult(
            seed=seed, lr=best.lr, test_accuracy=best.test_accuracy
        ))
    accs = np.array([s.test_accuracy for s in report.selected])
    report.mean_accuracy = float(accs.mean())
    report.std_accuracy = float(accs.std())
    return report


# --------------------------------------------------------------------------
# report output

CSV_HEADER = "method,transition,lambda,seed,lr,val_metric,test_acc"


def write_report(report: ExperimentReport, path, format: str = "csv") -> None:
    if format == "csv":
        lines = [CSV_HEADER]
        for c in report.cells:
            lines.append(
                f"{report.method},{report.transition},{report.noise_lambda!r},"
                f"{c.seed},{c.lr!r},{c.val_metric!r},{c.test_accuracy!r}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    elif format == "json":
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report_json(path) -> ExperimentReport:
    with open(path) as fh:
        return ExperimentReport.from_dict(json.load(fh))


def emit_loss_curves(report: ExperimentReport, out_dir) -> list:
    """One CSV per training cell with columns epoch,train_scel,val_scel.
    Returns the written paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for c in report.cells:
        name = f"curves_{report.method}_seed{c.seed}_lr{c.lr:g}.csv"
        path = os.path.join(out_dir, name)
        lines = ["epoch,train_scel,val_scel"]
        for epoch, (tr, va) in enumerate(zip(c.train_curve, c.val_curve), start=1):
            lines.append(f"{epoch},{tr!r},{va!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)
    return written


# --------------------------------------------------------------------------
# flat key=value config files, mirroring the CLI flags

_INT_KEYS = {"k", "d", "n_per_class", "test_n_per_class", "subset", "width",
             "epochs", "batch_size"}
_FLOAT_KEYS = {"separation", "noise_lambda", "validation_fraction"}


def parse_config_file(path) -> dict:
    """Lines of `key = value`; '#' starts a comment. Keys use the CLI flag
    names with dashes or underscores."""
    mapping = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key.replace("-", "_")] = value
    return mapping


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a config from string values (file or CLI); unknown keys are
    rejected."""
    kwargs = {}
    for key, value in mapping.items():
        if key == "lambda":
            key = "noise_lambda"
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str):
            if key in _INT_KEYS:
                value = int(value)
            elif key in _FLOAT_KEYS:
                value = float(value)
            elif key == "lr_grid":
                value = tuple(float(v) for v in value.split(","))
            elif key == "neighbor_grid":
                value = tuple(int(v) for v in value.split(","))
            elif key == "seeds":
                value = _parse_seeds(value)
        kwargs[key] = value
    return ExperimentConfig(**kwargs)


def _parse_seeds(value: str) -> tuple:
    if "," in value:
        return tuple(int(v) for v in value.split(","))
    return tuple(range(int(value)))
