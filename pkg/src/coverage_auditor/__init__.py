"""Flood-event coverage auditor.

Consolidates multi-source disaster records into a deduplicated ground
truth, mines a text corpus for event-describing sentences, geolocates and
time-locates them, matches them to ground-truth events, and reports hit
rates stratified by socio-economic indicators.
"""

__version__ = "0.1.0"
