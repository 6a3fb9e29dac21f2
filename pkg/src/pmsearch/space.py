"""The mixed configuration search space and points within it.

The default space has 100 parameters: 55 binary (feature and per-keyword
toggles), 11 categorical (compound query type per subquery, phrase vs
bag-of-words per clause type) and 34 numeric (BM25 hyperparameters,
subquery / clause / field weights). A handful of field-weight cells pair a
subquery with a field it never searches; they are kept so the space stays a
flat, uniform grid and are listed in the manifest docs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .terminology import NEGATIVE_KEYWORDS, POSITIVE_KEYWORDS

BINARY = "binary"
CATEGORICAL = "categorical"
NUMERIC = "numeric"

DISEASE_CLAUSES = ("topic", "preferred", "synonyms", "hypernyms", "solid")
GENE_CLAUSES = ("topic", "synonyms", "description", "family")
# Clause types whose weight is searchable; topic clauses anchor at 1.0.
WEIGHTED_CLAUSES = (
    "disease_preferred", "disease_synonyms", "disease_hypernyms", "disease_solid",
    "gene_synonyms", "gene_description", "gene_family",
)
MULTIWORD_CLAUSES = tuple(f"disease_{c}" for c in DISEASE_CLAUSES) + tuple(
    f"gene_{c}" for c in GENE_CLAUSES
)
SUBQUERIES = ("disease", "gene", "keywords_positive", "keywords_negative", "gene_tagger")
FIELDS = ("title", "abstract", "mesh", "gene")


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: object
    choices: tuple[str, ...] = ()
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == NUMERIC and not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")
        if self.kind == CATEGORICAL and self.default not in self.choices:
            raise ValueError(f"{self.name}: default not among choices")
        if self.kind == NUMERIC and not self.lo <= float(self.default) <= self.hi:  # type: ignore[arg-type]
            raise ValueError(f"{self.name}: default out of range")

    def validate(self, value: object) -> None:
        if self.kind == BINARY:
            if not isinstance(value, bool):
                raise ValueError(f"{self.name}: expected bool, got {value!r}")
        elif self.kind == CATEGORICAL:
            if value not in self.choices:
                raise ValueError(f"{self.name}: {value!r} not in {self.choices}")
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{self.name}: expected number, got {value!r}")
            if not self.lo <= float(value) <= self.hi:
                raise ValueError(f"{self.name}: {value} outside [{self.lo}, {self.hi}]")


class ParamSpace:
    """An ordered set of named parameters with kinds, ranges and defaults."""

    def __init__(self, params: list[Param]) -> None:
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names")
        self.params = tuple(params)
        self.by_name = {p.name: p for p in params}
        self.dim = sum(
            2 if p.kind == CATEGORICAL and len(p.choices) == 2 else
            len(p.choices) if p.kind == CATEGORICAL else 1
            for p in params
        )

    def __len__(self) -> int:
        return len(self.params)

    def counts(self) -> dict[str, int]:
        out = {BINARY: 0, CATEGORICAL: 0, NUMERIC: 0}
        for p in self.params:
            out[p.kind] += 1
        return out

    def default_configuration(self) -> "Configuration":
        return Configuration(self, {p.name: p.default for p in self.params})


class Configuration:
    """A complete, in-range assignment of every parameter in a space."""

    def __init__(self, space: ParamSpace, values: dict[str, object]) -> None:
        unknown = set(values) - set(space.by_name)
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        missing = set(space.by_name) - set(values)
        if missing:
            raise ValueError(f"missing parameters: {sorted(missing)}")
        for name, value in values.items():
            space.by_name[name].validate(value)
        self.space = space
        self.values = {p.name: values[p.name] for p in space.params}

    def __getitem__(self, name: str) -> object:
        return self.values[name]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Configuration) and self.values == other.values

    def with_overrides(self, overrides: dict[str, object]) -> "Configuration":
        merged = dict(self.values)
        merged.update(overrides)
        return Configuration(self.space, merged)

    def flag(self, name: str) -> bool:
        return bool(self.values[name])

    def num(self, name: str) -> float:
        return float(self.values[name])  # type: ignore[arg-type]

    def cat(self, name: str) -> str:
        return str(self.values[name])

    def positive_keywords(self) -> tuple[str, ...]:
        return tuple(w for w in POSITIVE_KEYWORDS if self.flag(f"kw.pos.{w.lower()}"))

    def negative_keywords(self) -> tuple[str, ...]:
        return tuple(w for w in NEGATIVE_KEYWORDS if self.flag(f"kw.neg.{w.lower()}"))


def default_space() -> ParamSpace:
    """The shipped 100-parameter search space (55 binary, 11 categorical, 34 numeric)."""
    params: list[Param] = [
        Param("bm25.b", NUMERIC, 0.75, lo=0.0, hi=1.0),
        Param("bm25.k1", NUMERIC, 1.20, lo=0.0, hi=2.0),
        Param("query.expansions.disease", CATEGORICAL, "disjunction",
              choices=("disjunction", "dis_max")),
        Param("query.expansions.gene", CATEGORICAL, "disjunction",
              choices=("disjunction", "dis_max")),
    ]
    for clause in MULTIWORD_CLAUSES:
        params.append(
            Param(f"query.multiword.{clause}", CATEGORICAL, "bag_of_words",
                  choices=("bag_of_words", "phrase"))
        )
    for sq in SUBQUERIES:
        if sq == "keywords_negative":
            params.append(Param(f"weight.subquery.{sq}", NUMERIC, -1.0, lo=-3.0, hi=0.0))
        elif sq == "gene_tagger":
            params.append(Param(f"weight.subquery.{sq}", NUMERIC, 0.0, lo=0.0, hi=3.0))
        else:
            params.append(Param(f"weight.subquery.{sq}", NUMERIC, 1.0, lo=0.0, hi=3.0))
    for clause in WEIGHTED_CLAUSES:
        params.append(Param(f"weight.clause.{clause}", NUMERIC, 1.0, lo=0.0, hi=3.0))
    for sq in SUBQUERIES:
        for f in FIELDS:
            params.append(Param(f"weight.field.{sq}.{f}", NUMERIC, 1.0, lo=0.0, hi=3.0))
    params += [
        Param("disease.preferred_term", BINARY, False),
        Param("disease.synonyms", BINARY, False),
        Param("disease.hypernyms", BINARY, False),
        Param("disease.solid_tumor", BINARY, False),
        Param("gene.synonyms", BINARY, False),
        Param("gene.description", BINARY, False),
        Param("gene.family", BINARY, False),
        Param("stopword_filtering", BINARY, False),
        Param("keyword.non_melanoma", BINARY, False),
    ]
    for w in POSITIVE_KEYWORDS:
        params.append(Param(f"kw.pos.{w.lower()}", BINARY, False))
    for w in NEGATIVE_KEYWORDS:
        params.append(Param(f"kw.neg.{w.lower()}", BINARY, False))
    return ParamSpace(params)


def encode(config: Configuration, space: ParamSpace) -> np.ndarray:
    """Fixed-dimension real vector: binary 0/1, one-hot categoricals,
    min-max scaled numerics."""
    out: list[float] = []
    for p in space.params:
        v = config.values[p.name]
        if p.kind == BINARY:
            out.append(1.0 if v else 0.0)
        elif p.kind == CATEGORICAL:
            out.extend(1.0 if v == c else 0.0 for c in p.choices)
        else:
            out.append((float(v) - p.lo) / (p.hi - p.lo))  # type: ignore[arg-type]
    return np.asarray(out, dtype=np.float64)


# ---------------------------------------------------------------------------
# Manifest and configuration file I/O.

def space_to_json(space: ParamSpace) -> dict:
    items = []
    for p in space.params:
        item: dict = {"name": p.name, "kind": p.kind, "default": p.default}
        if p.kind == CATEGORICAL:
            item["choices"] = list(p.choices)
        elif p.kind == NUMERIC:
            item["range"] = [p.lo, p.hi]
        items.append(item)
    return {"parameters": items}


def space_from_json(raw: dict) -> ParamSpace:
    params = []
    for item in raw["parameters"]:
        kind = item["kind"]
        if kind == CATEGORICAL:
            params.append(Param(item["name"], kind, item["default"],
                                choices=tuple(item["choices"])))
        elif kind == NUMERIC:
            lo, hi = item["range"]
            params.append(Param(item["name"], kind, float(item["default"]),
                                lo=float(lo), hi=float(hi)))
        else:
            params.append(Param(item["name"], kind, bool(item["default"])))
    return ParamSpace(params)


def load_space(path: str | Path) -> ParamSpace:
    with open(path, encoding="utf-8") as fh:
        return space_from_json(json.load(fh))


def save_space(space: ParamSpace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space_to_json(space), fh, indent=1)
        fh.write("\n")


def save_configuration(config: Configuration, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.values, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_configuration(path: str | Path, space: ParamSpace) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        values = json.load(fh)
    base = {p.name: p.default for p in space.params}
    base.update(values)
    return Configuration(space, base)


def _presets_raw() -> dict:
    text = resources.files("pmsearch.data").joinpath("presets.json").read_text("utf-8")
    return json.loads(text)


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_presets_raw()))


def load_preset(name: str, space: ParamSpace | None = None) -> Configuration:
    """A shipped named configuration (sparse overrides on the defaults)."""
    raw = _presets_raw()
    if name not in raw:
        raise ValueError(f"unknown preset {name!r}; have {sorted(raw)}")
    space = space or default_space()
    base = {p.name: p.default for p in space.params}
    base.update(raw[name])
    return Configuration(space, base)
