"""Periodic institutional report generation."""

from .analyzers import SECTION_ORDER, SECTION_TITLES, ReportAnalyzers, SectionDoc
from .assemble import Report, ReportRequest, assemble, check_reference_validity
from .render import render_html

__all__ = [
    "Report",
    "ReportAnalyzers",
    "ReportRequest",
    "SECTION_ORDER",
    "SECTION_TITLES",
    "SectionDoc",
    "assemble",
    "check_reference_validity",
    "render_html",
]
