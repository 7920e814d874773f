"""On-disk model registry: a directory of bundles plus a JSON manifest.

``manifest.json`` sits at the registry root::

    {"models": [{"domain": ..., "tier": ..., "hash": <hex>, "file": <name>}]}

Lookups resolve (domain, tier) with a fallback to the "general" domain.
Decompression resolves by content hash, so an artifact replays with
exactly the model that produced it or fails loudly. The default registry
location comes from the SRNZ_MODELS environment variable.
"""
from __future__ import annotations

import json
import os
import shutil
from dataclasses import dataclass

from .bundle import NOISE_TIERS, ModelBundle, load_bundle
from .errors import ConfigError, CorruptModelError, InvalidModelError, ModelNotFoundError

__all__ = [
    "REGISTRY_ENV",
    "FALLBACK_DOMAIN",
    "RegistryEntry",
    "ModelRegistry",
    "default_registry",
]

REGISTRY_ENV = "SRNZ_MODELS"
FALLBACK_DOMAIN = "general"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class RegistryEntry:
    domain: str
    tier: str
    hash_hex: str
    file: str


class ModelRegistry:
    """Reads and maintains one registry directory."""

    def __init__(self, root: str | os.PathLike):
        self.root = os.fspath(root)
        self._cache: dict[str, ModelBundle] = {}
        self.entries: list[RegistryEntry] = []
        manifest = os.path.join(self.root, MANIFEST_NAME)
        if os.path.exists(manifest):
            with open(manifest, "r", encoding="utf-8") as fh:
                try:
                    doc = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{manifest}: manifest is not valid JSON: {exc}")
            for row in doc.get("models", []):
                tier = row.get("tier")
                if tier not in NOISE_TIERS:
                    raise ConfigError(f"{manifest}: unknown tier {tier!r}")
                self.entries.append(
                    RegistryEntry(
                        domain=str(row.get("domain", FALLBACK_DOMAIN)),
                        tier=tier,
                        hash_hex=str(row.get("hash", "")),
                        file=str(row.get("file", "")),
                    )
                )

    # -- persistence -------------------------------------------------------

    def _write_manifest(self) -> None:
        doc = {
            "models": [
                {"domain": e.domain, "tier": e.tier, "hash": e.hash_hex, "file": e.file}
                for e in self.entries
            ]
        }
        os.makedirs(self.root, exist_ok=True)
        path = os.path.join(self.root, MANIFEST_NAME)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def add(self, bundle_path: str | os.PathLike, domain: str = FALLBACK_DOMAIN) -> RegistryEntry:
        """Copy a bundle into the registry and index it.

        The tier comes from the bundle itself. A (domain, tier) pair can
        hold only one model; re-adding replaces the previous entry.
        """
        bundle = load_bundle(bundle_path)
        os.makedirs(self.root, exist_ok=True)
        file_name = f"{bundle.hash_hex}.srnb"
        dest = os.path.join(self.root, file_name)
        src = os.fspath(bundle_path)
        if os.path.abspath(src) != os.path.abspath(dest):
            shutil.copyfile(src, dest)
        entry = RegistryEntry(domain, bundle.noise_tier, bundle.hash_hex, file_name)
        self.entries = [
            e for e in self.entries if not (e.domain == domain and e.tier == bundle.noise_tier)
        ]
        self.entries.append(entry)
        self._cache[bundle.hash_hex] = bundle
        self._write_manifest()
        return entry

    # -- lookups -----------------------------------------------------------

    def _load_entry(self, entry: RegistryEntry) -> ModelBundle:
        cached = self._cache.get(entry.hash_hex)
        if cached is not None:
            return cached
        path = os.path.join(self.root, entry.file)
        if not os.path.exists(path):
            raise ModelNotFoundError(
                f"registry entry ({entry.domain}, {entry.tier}) points to missing file {path}"
            )
        bundle = load_bundle(path)
        if bundle.hash_hex != entry.hash_hex:
            raise CorruptModelError(
                f"{path}: content hash {bundle.hash_hex} does not match manifest"
                f" entry {entry.hash_hex}"
            )
        self._cache[entry.hash_hex] = bundle
        return bundle

    def resolve(self, domain: str, tier: str) -> ModelBundle:
        """Find the model for (domain, tier), falling back to the general domain."""
        if tier not in NOISE_TIERS:
            raise ConfigError(f"unknown noise tier {tier!r}")
        for want in (domain, FALLBACK_DOMAIN):
            for entry in self.entries:
                if entry.domain == want and entry.tier == tier:
                    return self._load_entry(entry)
        have = sorted((e.domain, e.tier) for e in self.entries)
        raise ModelNotFoundError(
            f"no model for domain {domain!r} tier {tier!r}; registry holds {have}"
        )

    def find_by_hash(self, content_hash: bytes) -> ModelBundle:
        """Resolve the exact model an artifact was compressed with."""
        want = content_hash.hex()
        cached = self._cache.get(want)
        if cached is not None:
            return cached
        for entry in self.entries:
            if entry.hash_hex == want:
                return self._load_entry(entry)
        raise ModelNotFoundError(f"no registered model with content hash {want}")

    def verify(self) -> list[str]:
        """Check every entry loads and hashes as the manifest claims.

        Returns a list of problem descriptions; empty means healthy.
        """
        problems = []
        for entry in self.entries:
            try:
                self._load_entry(entry)
            except (ModelNotFoundError, CorruptModelError, InvalidModelError) as exc:
                problems.append(f"({entry.domain}, {entry.tier}): {exc}")
        return problems


def default_registry() -> ModelRegistry | None:
    """Registry named by the SRNZ_MODELS environment variable, if any."""
    root = os.environ.get(REGISTRY_ENV)
    if not root:
        return None
    return ModelRegistry(root)
