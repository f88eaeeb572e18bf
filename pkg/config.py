import os
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Optional, Tuple

from dotenv import load_dotenv

from errors import InvalidConfiguration

load_dotenv()

# Every analysis flag can be set through an environment variable with this prefix,
# e.g. JKMINER_MIN_SUPPORT=0.01. Command-line flags take precedence.
ENV_PREFIX = "JKMINER_"


def _env(name, default):
    return os.getenv(f"{ENV_PREFIX}{name}", default)


def _env_bool(name, default):
    value = os.getenv(f"{ENV_PREFIX}{name}")
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# Malformed numeric variables fall back to their default here and are reported by
# AnalysisConfig.validate(), so the CLI can exit with InvalidConfiguration.
ENV_ERRORS = {}


def _env_number(name, default, cast=int):
    value = os.getenv(f"{ENV_PREFIX}{name}")
    if value is None:
        return default
    try:
        return cast(value.strip())
    except ValueError:
        ENV_ERRORS[f"{ENV_PREFIX}{name}"] = value
        return default


TOOL_VERSION = "1.0.0"
REPORT_SCHEMA_VERSION = 1

# Repository selection
REPO_PATH = _env("REPO", None)
BRANCH = _env("BRANCH", None)  # None means the branch HEAD points to

# Detectors: any of file, method, update_insert
ALL_DETECTORS = ("file", "method", "update_insert")
DETECTORS = _env("DETECTORS", ",".join(ALL_DETECTORS))

# Generated test files created by Android Studio with a new project
EXCLUDE_GENERATED_TESTS = _env_bool("EXCLUDE_GENERATED_TESTS", True)
GENERATED_TEST_FILENAMES = ("ExampleUnitTest.java", "ApplicationTest.java")

# Method-level detection does not compare method names unless enabled
MATCH_METHOD_NAMES = _env_bool("MATCH_METHOD_NAMES", False)

# Commit-message keywords recorded per commit (case-insensitive substring match)
MIGRATION_KEYWORDS = ("kotlin", "migrat", "convert", "java")

# Frequent itemset mining. Support is a fraction in (0, 1].
MIN_SUPPORT = _env("MIN_SUPPORT", "0.004")
MAX_ITEMSET_SIZE = _env_number("MAX_ITEMSET_SIZE", 4)

# Recent-commit baseline for trends:
#   kotlin_era  - latest index minus 10% of the commits since Kotlin was introduced
#   all_commits - latest index minus 10% of all commits
RECENT_BASELINE_MODES = ("kotlin_era", "all_commits")
RECENT_BASELINE = _env("RECENT_BASELINE", "kotlin_era")
RECENT_BASELINE_FRACTION = Fraction(1, 10)

# Output
OUTPUT_DIR = _env("OUTPUT_DIR", "migration_report")
ALL_FORMATS = ("json", "csv")
FORMATS = _env("FORMATS", "json,csv")
REPORT_FILENAME = "report.json"
SNAPSHOTS_CSV_FILENAME = "snapshots.csv"
ITEMSETS_CSV_FILENAME = "itemsets.csv"
EVENTS_CSV_FILENAME = "events.csv"

# Git history
RENAME_SIMILARITY = _env_number("RENAME_SIMILARITY", 60)  # percent, passed to git --find-renames
BINARY_SNIFF_BYTES = 8000  # NUL byte within this window marks a file as binary

# Tree differencing (GumTree defaults)
MIN_HEIGHT = _env_number("MIN_HEIGHT", 2)
DICE_THRESHOLD = _env_number("DICE_THRESHOLD", 0.5, float)
MAX_SIZE = _env_number("MAX_SIZE", 100)

# Multi-threading configuration
ENABLE_MULTI_THREADING = _env_bool("ENABLE_MULTI_THREADING", True)
MAX_WORKER_THREADS = _env_number("MAX_WORKER_THREADS", 8)
MIN_COMMITS_FOR_MULTI_THREADING = 4  # Below this, commits are analysed sequentially

# Progress bar configuration
ENABLE_PROGRESS_BARS = _env_bool("ENABLE_PROGRESS_BARS", True)
PROGRESS_BAR_DESCRIPTION = "Analyzing commits"

# Logging configuration
LOG_LEVEL = _env("LOG_LEVEL", "INFO")
LOG_FILE = _env("LOG_FILE", "jk_migration_miner.log")
# Set to True to show GitPython command logs, False for clean console output
VERBOSE_GIT_LOGS = _env_bool("VERBOSE_GIT_LOGS", False)


def split_list(value) -> Tuple[str, ...]:
    """Split a comma-separated option into a tuple, dropping blanks."""
    if value is None:
        return ()
    if isinstance(value, (list, tuple, set, frozenset)):
        return tuple(str(v).strip() for v in value if str(v).strip())
    return tuple(part.strip() for part in str(value).split(",") if part.strip())


@dataclass
class AnalysisConfig:
    """Settings for one analysis run."""

    repo_path: Optional[str] = REPO_PATH
    branch: Optional[str] = BRANCH
    detectors: Tuple[str, ...] = field(default_factory=lambda: split_list(DETECTORS))
    exclude_generated_tests: bool = EXCLUDE_GENERATED_TESTS
    name_matching: bool = MATCH_METHOD_NAMES
    min_support: Fraction = field(default_factory=lambda: Fraction(str(MIN_SUPPORT)))
    max_itemset_size: int = MAX_ITEMSET_SIZE
    recent_baseline_mode: str = RECENT_BASELINE
    output_dir: str = OUTPUT_DIR
    formats: Tuple[str, ...] = field(default_factory=lambda: split_list(FORMATS))
    min_height: int = MIN_HEIGHT
    dice_threshold: float = DICE_THRESHOLD
    max_size: int = MAX_SIZE

    def __post_init__(self):
        self.detectors = split_list(self.detectors)
        self.formats = split_list(self.formats)
        if not isinstance(self.min_support, Fraction):
            try:
                self.min_support = Fraction(str(self.min_support))
            except ValueError as e:
                raise InvalidConfiguration(f"min_support is not a number: {self.min_support}") from e

    def validate(self) -> "AnalysisConfig":
        """Check option values; raises InvalidConfiguration on the first problem."""
        if ENV_ERRORS:
            bad = ", ".join(f"{name}={value!r}" for name, value in sorted(ENV_ERRORS.items()))
            raise InvalidConfiguration(f"Environment variables are not numbers: {bad}")
        if not self.repo_path:
            raise InvalidConfiguration("No repository path given (--repo or JKMINER_REPO)")
        if not self.detectors:
            raise InvalidConfiguration("At least one detector must be enabled")
        unknown = [d for d in self.detectors if d not in ALL_DETECTORS]
        if unknown:
            raise InvalidConfiguration(f"Unknown detectors: {unknown}; expected any of {list(ALL_DETECTORS)}")
        if not (0 < self.min_support <= 1):
            raise InvalidConfiguration(f"min_support must be in (0, 1], got {self.min_support}")
        if self.max_itemset_size < 1:
            raise InvalidConfiguration(f"max_itemset_size must be >= 1, got {self.max_itemset_size}")
        if self.recent_baseline_mode not in RECENT_BASELINE_MODES:
            raise InvalidConfiguration(
                f"Unknown recent baseline mode {self.recent_baseline_mode!r}; expected one of {list(RECENT_BASELINE_MODES)}")
        unknown_formats = [f for f in self.formats if f not in ALL_FORMATS]
        if not self.formats or unknown_formats:
            raise InvalidConfiguration(f"Formats must be a non-empty subset of {list(ALL_FORMATS)}, got {list(self.formats)}")
        if self.min_height < 1 or self.max_size < 0 or not (0 <= self.dice_threshold <= 1):
            raise InvalidConfiguration("Tree diff parameters out of range")
        return self

    def to_dict(self) -> dict:
        """Config echo for the report, with keys in a fixed order."""
        data = asdict(self)
        data['detectors'] = list(self.detectors)
        data['formats'] = list(self.formats)
        data['min_support'] = str(self.min_support)
        return data
