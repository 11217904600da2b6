"""Retrieval-augmented vaccine information platform.

Public chat answers come from a multi-collection vector knowledge base with
validated inline citations; periodic analytical reports (news, research,
social sentiment, chat patterns) serve institutional stakeholders; a
rubric-based judge harness scores both functions.
"""

__version__ = "0.1.0"
