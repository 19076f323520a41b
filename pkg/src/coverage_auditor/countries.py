"""Country registry with alias-based name normalization.

The registry maps ISO-3166 alpha-3 codes to display names and continents.
Source databases spell country names inconsistently ("USA", "United States
of America (the)", "Viet Nam"), so lookups go through an alias table that
is case- and punctuation-insensitive. Unknown names are reported as
unresolved, never guessed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path


class Continent(str, Enum):
    ASIA = "Asia"
    NORTH_AMERICA = "NorthAmerica"
    AFRICA = "Africa"
    EUROPE = "Europe"
    SOUTH_AMERICA = "SouthAmerica"
    OCEANIA = "Oceania"


@dataclass(frozen=True)
class CountryCode:
    iso3: str
    display_name: str
    continent: Continent


_NON_WORD_RE = re.compile(r"[^\w\s]", re.UNICODE)


def normalize_name(raw: str) -> str:
    """Lowercase, drop punctuation, collapse whitespace."""
    cleaned = _NON_WORD_RE.sub(" ", raw.lower())
    return " ".join(cleaned.split())


def _default_data_path(filename: str) -> Path:
    return Path(str(resources.files("coverage_auditor").joinpath("data", filename)))


class CountryRegistry:
    """Immutable lookup from country names/aliases to CountryCode."""

    def __init__(self, countries: dict[str, CountryCode], aliases: dict[str, str]):
        self._countries = dict(countries)
        self._aliases = dict(aliases)  # normalized alias -> iso3

    @classmethod
    def load(cls, registry_path: Path | None = None,
             alias_path: Path | None = None) -> "CountryRegistry":
        registry_path = registry_path or _default_data_path("country_registry.tsv")
        alias_path = alias_path or _default_data_path("country_aliases.tsv")

        countries: dict[str, CountryCode] = {}
        for line in _read_tsv(registry_path):
            iso3, display_name, continent = line
            countries[iso3] = CountryCode(iso3, display_name, Continent(continent))

        aliases: dict[str, str] = {}
        # Canonical display names always resolve to themselves.
        for code in countries.values():
            aliases[normalize_name(code.display_name)] = code.iso3
            aliases[normalize_name(code.iso3)] = code.iso3
        for alias, iso3 in _read_tsv(alias_path):
            if iso3 not in countries:
                raise ValueError(f"alias {alias!r} points to unknown code {iso3!r}")
            aliases[normalize_name(alias)] = iso3
        return cls(countries, aliases)

    def get(self, iso3: str) -> CountryCode:
        return self._countries[iso3]

    def get_optional(self, iso3: str) -> CountryCode | None:
        return self._countries.get(iso3)

    def normalize_country(self, name_raw: str) -> CountryCode | None:
        """Resolve a raw country name through the alias table, or None."""
        iso3 = self._aliases.get(normalize_name(name_raw))
        return self._countries[iso3] if iso3 else None

    def alias_items(self) -> list[tuple[str, CountryCode]]:
        """All (normalized alias, country) pairs, longest alias first.

        Used by whole-text country inference; the length ordering makes
        "south sudan" win over "sudan" when both could match.
        """
        items = [(alias, self._countries[iso3])
                 for alias, iso3 in self._aliases.items()]
        items.sort(key=lambda kv: (-len(kv[0]), kv[0]))
        return items

    def __len__(self) -> int:
        return len(self._countries)

    def __iter__(self):
        return iter(sorted(self._countries.values(), key=lambda c: c.iso3))


def _read_tsv(path: Path):
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            yield tuple(field.strip() for field in line.split("\t"))


_DEFAULT: CountryRegistry | None = None


def default_registry() -> CountryRegistry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = CountryRegistry.load()
    return _DEFAULT
