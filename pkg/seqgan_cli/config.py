"""Experiment configuration: INI files with one section per component, a default table and the resolved echo."""

import configparser
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

from seqgan_cli.discriminator import load_kernel_preset
from seqgan_cli.errors import ConfigError
from seqgan_cli.generator import GeneratorDims
from seqgan_cli.numerics import OPTIMIZER_KINDS, PRECISIONS, OptimizerConfig
from seqgan_cli.rollout import BASELINES
from seqgan_cli.training import ALGORITHMS, TrainingConfig


MODES = ("synthetic", "corpus")
RESOLVED_NAME = "config.resolved"


@dataclass(frozen=True)
class Option:
    """One configuration key: value kind, default and an optional constraint."""

    kind: str
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""


def _positive(value) -> bool:
    return value >= 1


def _non_negative(value) -> bool:
    return value >= 0


def _choice(*choices) -> Callable[[Any], bool]:
    return lambda value: value in choices


POSITIVE = "must be at least 1"
NON_NEGATIVE = "must be non-negative"

DEFAULTS: Dict[str, Dict[str, Option]] = {
    "experiment": {
        "mode": Option("str", "synthetic", _choice(*MODES), f"must be one of {', '.join(MODES)}"),
        "algorithms": Option("algorithms", ALGORITHMS),
        "seed": Option("int", 0, _non_negative, NON_NEGATIVE),
        "seq_len": Option("int", 16, _positive, POSITIVE),
        "precision": Option("str", "float64", _choice(*PRECISIONS), f"must be one of {', '.join(PRECISIONS)}"),
    },
    "oracle": {
        "seed": Option("optional_int", None, _non_negative, NON_NEGATIVE),
        "vocab_size": Option("int", 100, _positive, POSITIVE),
        "train_size": Option("int", 2000, _positive, POSITIVE),
    },
    "corpus": {
        "train": Option("path", None),
        "test": Option("path", None),
        "vocab": Option("path", None),
        "truncate": Option("bool", True),
    },
    "generator": {
        "embedding_dim": Option("int", 32, _positive, POSITIVE),
        "hidden_dim": Option("int", 32, _positive, POSITIVE),
        "optimizer": Option("str", "adam", _choice(*OPTIMIZER_KINDS), f"must be one of {', '.join(OPTIMIZER_KINDS)}"),
        "pretrain_learning_rate": Option("float", 0.01, _non_negative, NON_NEGATIVE),
        "adversarial_learning_rate": Option("float", 0.01, _non_negative, NON_NEGATIVE),
        "clip_norm": Option("optional_float", 5.0, lambda v: v > 0, "must be positive"),
        "batch_size": Option("int", 64, _positive, POSITIVE),
        "pretrain_epochs": Option("int", 50, _non_negative, NON_NEGATIVE),
        "plateau_tolerance": Option("float", 1e-4, _non_negative, NON_NEGATIVE),
        "plateau_window": Option("int", 5, _positive, POSITIVE),
    },
    "discriminator": {
        "embedding_dim": Option("int", 64, _positive, POSITIVE),
        "kernels": Option("str", "desk"),
        "dropout_keep": Option("float", 0.75, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        "optimizer": Option("str", "adam", _choice(*OPTIMIZER_KINDS), f"must be one of {', '.join(OPTIMIZER_KINDS)}"),
        "learning_rate": Option("float", 1e-3, _non_negative, NON_NEGATIVE),
        "clip_norm": Option("optional_float", None, lambda v: v > 0, "must be positive"),
        "l2_coefficient": Option("float", 0.0, _non_negative, NON_NEGATIVE),
        "batch_size": Option("int", 64, _positive, POSITIVE),
        "pretrain_steps": Option("int", 5, _non_negative, NON_NEGATIVE),
        "pretrain_epochs": Option("int", 3, _non_negative, NON_NEGATIVE),
    },
    "adversarial": {
        "rounds": Option("int", 30, _non_negative, NON_NEGATIVE),
        "g_steps": Option("int", 1, _positive, POSITIVE),
        "d_steps": Option("int", 1, _positive, POSITIVE),
        "k": Option("int", 10, _positive, POSITIVE),
        "rollout_num": Option("int", 16, _positive, POSITIVE),
        "baseline": Option("str", "none", _choice(*BASELINES), f"must be one of {', '.join(BASELINES)}"),
        "early_stop_patience": Option("int", 10, _non_negative, NON_NEGATIVE),
    },
    "baselines": {
        "ss_decay": Option("float", 0.002, _non_negative, NON_NEGATIVE),
        "pg_bleu_n": Option("int", 2, _positive, POSITIVE),
    },
    "evaluation": {
        "samples": Option("int", 5000, _positive, POSITIVE),
        "every": Option("int", 1, _positive, POSITIVE),
        "bleu_n": Option("int", 2, _positive, POSITIVE),
    },
    "output": {
        "dir": Option("path", Path("runs")),
        "record_wallclock": Option("bool", False),
        "checkpoint_keep": Option("int", 3, _positive, POSITIVE),
    },
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(kind: str, text: str) -> Any:
    text = text.strip()
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "optional_int":
        return int(text) if text else None
    if kind == "optional_float":
        return float(text) if text else None
    if kind == "bool":
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ValueError(f"expected true or false, got '{text}'")
    if kind == "path":
        return Path(text) if text else None
    if kind == "algorithms":
        names = tuple(name.strip() for name in text.split(",") if name.strip())
        if not names:
            raise ValueError("at least one algorithm is required")
        unknown = [name for name in names if name not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm(s) {unknown}, expected some of {list(ALGORITHMS)}")
        return names
    return text


def format_value(value: Any) -> str:
    """Text form of a resolved value; parsing it back yields the same value."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(value)
    return str(value)


def _line_index(text: str) -> Dict[str, int]:
    """1-based line of every ``section.key`` (and ``[section]`` header) in an INI text."""
    lines: Dict[str, int] = {}
    section = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        header = re.match(r"^\[([^\]]+)\]", stripped)
        if header:
            section = header.group(1).strip()
            lines.setdefault(section, line_no)
            continue
        key = re.match(r"^([^=:]+?)\s*[=:]", stripped)
        if key and section is not None:
            lines.setdefault(f"{section}.{key.group(1).strip().lower()}", line_no)
    return lines


def _resolve_one(section: str, key: str, text: str, line: Optional[int]) -> Any:
    option = DEFAULTS[section][key]
    name = f"{section}.{key}"
    try:
        value = _convert(option.kind, text)
    except ValueError as e:
        raise ConfigError(f"Invalid value '{text}' for {name}: {e}", key=name, line=line)
    if value is not None and option.check is not None and not option.check(value):
        raise ConfigError(f"{name} {option.rule}, got {format_value(value)}", key=name, line=line)
    return value


def resolve_values(
    text: str = "",
    overrides: Optional[Mapping[str, str]] = None,
) -> Dict[str, Any]:
    """
    Parse INI ``text`` and apply ``overrides`` on top of DEFAULTS.

    Args:
        text: INI source (may be empty)
        overrides: ``section.key`` -> raw text, applied after the file

    Returns:
        Mapping from every ``section.key`` to its typed value

    Raises:
        ConfigError: For unknown sections or keys, malformed values and constraint violations.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"Duplicate key '{e.option}'", key=f"{e.section}.{e.option}", line=e.lineno)
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"Duplicate section '{e.section}'", key=e.section, line=e.lineno)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("Key outside of any section", line=e.lineno)
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError("Malformed configuration line", line=line)

    lines = _line_index(text)
    values = {f"{s}.{k}": option.default for s, options in DEFAULTS.items() for k, option in options.items()}

    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"Unknown section [{section}]", key=section, line=lines.get(section))
        for key, raw in parser.items(section):
            name = f"{section}.{key}"
            if key not in DEFAULTS[section]:
                raise ConfigError(f"Unknown key '{key}' in [{section}]", key=name, line=lines.get(name))
            values[name] = _resolve_one(section, key, raw, lines.get(name))

    for name, raw in (overrides or {}).items():
        section, _, key = name.partition(".")
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(f"Unknown key '{name}'", key=name)
        values[name] = _resolve_one(section, key, raw, None)
    return values


@dataclass
class ExperimentConfig:
    """A fully validated experiment: mode, data, model dimensions, training and output settings."""

    mode: str
    algorithms: Tuple[str, ...]
    seed: int
    seq_len: int
    training: TrainingConfig
    embedding_dim: int
    hidden_dim: int
    oracle_seed: Optional[int] = None
    vocab_size: Optional[int] = None
    train_size: int = 2000
    corpus_train: Optional[Path] = None
    corpus_test: Optional[Path] = None
    corpus_vocab: Optional[Path] = None
    truncate: bool = True
    bleu_n: int = 2
    output_dir: Path = Path("runs")
    record_wallclock: bool = False
    checkpoint_keep: int = 3
    values: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def generator_dims(self, vocab_size: Optional[int] = None) -> GeneratorDims:
        size = vocab_size if vocab_size is not None else self.vocab_size
        if size is None:
            raise ConfigError("The vocabulary size is only known after corpus ingestion", key="corpus.vocab")
        return GeneratorDims(size, self.seq_len, self.embedding_dim, self.hidden_dim)

    def with_overrides(self, overrides: Mapping[str, str]) -> "ExperimentConfig":
        """A new config with ``section.key`` overrides applied to this one's resolved values."""
        merged = dict(self.values)
        for name, value in resolve_values("", overrides).items():
            if name in overrides:
                merged[name] = value
        return build_config(merged)


def build_config(values: Mapping[str, Any], lines: Optional[Mapping[str, int]] = None) -> ExperimentConfig:
    """Cross-key validation and construction of an ExperimentConfig from resolved values."""
    lines = lines or {}
    v = dict(values)
    mode = v["experiment.mode"]
    if mode == "synthetic" and v["oracle.seed"] is None:
        raise ConfigError("Synthetic mode requires an oracle seed", key="oracle.seed", line=lines.get("oracle"))
    if mode == "corpus":
        for key in ("corpus.train", "corpus.test", "corpus.vocab"):
            if v[key] is None:
                raise ConfigError(f"Corpus mode requires {key}", key=key, line=lines.get("corpus"))

    seq_len = v["experiment.seq_len"]
    kernels = load_kernel_preset(v["discriminator.kernels"], seq_len)

    def optimizer(kind: str, rate: float, clip: Optional[float], l2: float = 0.0) -> OptimizerConfig:
        return OptimizerConfig(kind, rate, clip_norm=clip, l2_coefficient=l2)

    try:
        training = TrainingConfig(
            seed=v["experiment.seed"],
            g_steps=v["adversarial.g_steps"],
            d_steps=v["adversarial.d_steps"],
            k=v["adversarial.k"],
            rollout_num=v["adversarial.rollout_num"],
            pretrain_gen_epochs=v["generator.pretrain_epochs"],
            pretrain_disc_steps=v["discriminator.pretrain_steps"],
            pretrain_disc_epochs=v["discriminator.pretrain_epochs"],
            total_adversarial_rounds=v["adversarial.rounds"],
            gen_batch_size=v["generator.batch_size"],
            disc_batch_size=v["discriminator.batch_size"],
            pretrain_optimizer=optimizer(
                v["generator.optimizer"], v["generator.pretrain_learning_rate"], v["generator.clip_norm"],
            ),
            adversarial_optimizer=optimizer(
                v["generator.optimizer"], v["generator.adversarial_learning_rate"], v["generator.clip_norm"],
            ),
            disc_optimizer=optimizer(
                v["discriminator.optimizer"], v["discriminator.learning_rate"],
                v["discriminator.clip_norm"], v["discriminator.l2_coefficient"],
            ),
            baseline=v["adversarial.baseline"],
            eval_every=v["evaluation.every"],
            eval_samples=v["evaluation.samples"],
            plateau_tolerance=v["generator.plateau_tolerance"],
            plateau_window=v["generator.plateau_window"],
            early_stop_patience=v["adversarial.early_stop_patience"],
            ss_decay=v["baselines.ss_decay"],
            pg_bleu_n=v["baselines.pg_bleu_n"],
            disc_embedding_dim=v["discriminator.embedding_dim"],
            kernels=tuple(kernels),
            dropout_keep=v["discriminator.dropout_keep"],
            precision=v["experiment.precision"],
        )
    except ValueError as e:
        raise ConfigError(str(e))

    return ExperimentConfig(
        mode=mode,
        algorithms=v["experiment.algorithms"],
        seed=v["experiment.seed"],
        seq_len=seq_len,
        training=training,
        embedding_dim=v["generator.embedding_dim"],
        hidden_dim=v["generator.hidden_dim"],
        oracle_seed=v["oracle.seed"],
        vocab_size=v["oracle.vocab_size"] if mode == "synthetic" else None,
        train_size=v["oracle.train_size"],
        corpus_train=v["corpus.train"],
        corpus_test=v["corpus.test"],
        corpus_vocab=v["corpus.vocab"],
        truncate=v["corpus.truncate"],
        bleu_n=v["evaluation.bleu_n"],
        output_dir=v["output.dir"],
        record_wallclock=v["output.record_wallclock"],
        checkpoint_keep=v["output.checkpoint_keep"],
        values=v,
    )


def parse_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Load and validate an experiment configuration.

    Args:
        path: INI file; omitted means defaults only
        overrides: ``section.key`` -> raw text from command-line flags or grid lines

    Returns:
        The validated configuration

    Raises:
        ConfigError: With the offending ``section.key`` and line where known.
    """
    text = ""
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read configuration file {path}: {e.strerror}")
    values = resolve_values(text, overrides)
    return build_config(values, _line_index(text))


def render_resolved(config: ExperimentConfig) -> str:
    """Every key in DEFAULTS order, in INI form."""
    parser = configparser.ConfigParser(interpolation=None)
    for section, options in DEFAULTS.items():
        parser.add_section(section)
        for key in options:
            parser.set(section, key, format_value(config.values[f"{section}.{key}"]))
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def write_resolved(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_resolved(config), encoding="utf-8")
    return path


def parse_override(text: str, line: Optional[int] = None) -> Tuple[str, str]:
    """Split one ``section.key=value`` override."""
    name, sep, value = text.partition("=")
    name = name.strip()
    if not sep or "." not in name:
        raise ConfigError(f"Expected section.key=value, got '{text.strip()}'", line=line)
    return name, value.strip()


def parse_grid(path: Union[str, Path]) -> List[Dict[str, str]]:
    """
    Read a grid file: one run per line, ``section.key=value`` overrides separated by ``;``.

    Blank lines and lines starting with ``#`` are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read grid file {path}: {e.strerror}")
    runs = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        runs.append(dict(parse_override(part, line_no) for part in stripped.split(";") if part.strip()))
    if not runs:
        raise ConfigError(f"Grid file {path} defines no runs")
    return runs
