"""Prompt template loading and placeholder filling.

Templates ship as versioned text files inside the package; they are the
method, so code never rewrites their wording. Filling is literal string
replacement — the extraction templates contain JSON braces, so
``str.format`` would mangle them.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

PROMPTS_VERSION = "v1"

CLASSIFY_TYPES = f"classify_types_{PROMPTS_VERSION}"
GENERATE_QUESTION = f"generate_question_{PROMPTS_VERSION}"
REWRITE_QUERY = f"rewrite_query_{PROMPTS_VERSION}"
EXTRACT_DEFAULT = f"extract_default_{PROMPTS_VERSION}"
EXTRACT_PARAGRAPH = f"extract_paragraph_{PROMPTS_VERSION}"


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Read a packaged prompt template by its versioned name."""
    return resources.files("spanqa").joinpath(f"templates/{name}.txt").read_text("utf-8")


def fill(template: str, values: dict[str, str]) -> str:
    """Replace each literal placeholder with its value.

    Keys are the exact placeholder strings (e.g. ``{chunk}`` or
    ``{{ question }}``). A placeholder missing from the template is a
    programming error and raises KeyError.
    """
    out = template
    for placeholder, value in values.items():
        if placeholder not in out:
            raise KeyError(f"placeholder {placeholder!r} not present in template")
        out = out.replace(placeholder, value)
    return out
