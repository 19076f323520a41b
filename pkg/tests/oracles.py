"""Independent brute-force reference for event consolidation.

Deliberately naive: repeatedly merge any two clusters that share a country
and contain at least one overlapping pair of records, until nothing merges.
O(n^3)-ish, but obviously correct, which is the point.
"""

from __future__ import annotations

from coverage_auditor.ground_truth import SourceRecord


def _records_overlap(a: SourceRecord, b: SourceRecord) -> bool:
    if a.country.iso3 != b.country.iso3:
        return False
    return a.start_date <= b.end_date and b.start_date <= a.end_date


def _clusters_touch(ca: list[SourceRecord], cb: list[SourceRecord]) -> bool:
    return any(_records_overlap(a, b) for a in ca for b in cb)


def oracle_consolidate(records: list[SourceRecord]) -> set[tuple]:
    """Transitive closure by pairwise merging to a fixpoint.

    Returns a set of cluster signatures:
    (iso3, min start, max end, frozenset of (source, native_id)).
    """
    clusters: list[list[SourceRecord]] = [[r] for r in records]
    merged = True
    while merged:
        merged = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                if _clusters_touch(clusters[i], clusters[j]):
                    clusters[i].extend(clusters.pop(j))
                    merged = True
                    break
            if merged:
                break
    return {
        (
            cluster[0].country.iso3,
            min(r.start_date for r in cluster),
            max(r.end_date for r in cluster),
            frozenset((r.source_id.value, r.native_id) for r in cluster),
        )
        for cluster in clusters
    }
