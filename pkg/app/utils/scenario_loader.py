"""
Loading, validating and hashing scenario documents.
"""
import copy
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from app.models.scenario import Scenario

logger = logging.getLogger(__name__)


class ScenarioError(Exception):
    """
    A scenario document could not be loaded.

    Attributes:
        diagnostics: (location, message) pairs; locations are dotted field
            paths, with the source line when it could be found
    """

    def __init__(self, message: str, diagnostics: Iterable[Tuple[str, str]] = ()):
        self.diagnostics: List[Tuple[str, str]] = list(diagnostics)
        details = "; ".join(f"{where}: {what}" for where, what in self.diagnostics)
        super().__init__(f"{message}: {details}" if details else message)
        self.message = message

    def to_dict(self) -> Dict[str, Any]:
        return {
            "detail": self.message,
            "errors": [{"location": where, "message": what} for where, what in self.diagnostics],
        }


def _locate(text: str, loc: Sequence[Union[str, int]]) -> Optional[int]:
    """Line of the innermost key of loc in text, found by walking the keys in order."""
    pos = -1
    for part in loc:
        if not isinstance(part, str):
            continue
        found = text.find(f'"{part}"', pos + 1)
        if found < 0:
            break
        pos = found
    if pos < 0:
        return None
    return text.count("\n", 0, pos) + 1


def scenario_from_dict(data: Any, text: Optional[str] = None) -> Scenario:
    """Validate already-decoded JSON; text, if given, is used to report line numbers."""
    if not isinstance(data, dict):
        raise ScenarioError("Invalid scenario", [("$", "the document must be a JSON object")])
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        diagnostics = []
        for error in e.errors():
            loc = error.get("loc", ())
            path = ".".join(str(part) for part in loc) or "$"
            line = _locate(text, loc) if text else None
            where = f"{path} (line {line})" if line else path
            if error.get("type") == "extra_forbidden":
                message = f"unknown field '{loc[-1]}'"
            else:
                message = error.get("msg", "invalid value")
            diagnostics.append((where, message))
        raise ScenarioError(f"Invalid scenario ({len(diagnostics)} problem(s))", diagnostics) from None


def load_scenario(text: str) -> Scenario:
    """
    Parse and validate a scenario document.

    Raises:
        ScenarioError: On malformed JSON (with line and column) or schema
            violations (with the dotted field path)
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(
            "Scenario is not valid JSON", [(f"line {e.lineno}, column {e.colno}", e.msg)]
        ) from None
    scenario = scenario_from_dict(data, text)
    logger.debug(f"Loaded scenario '{scenario.name}' ({scenario.topology})")
    return scenario


def load_scenario_file(path: Union[str, Path]) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario file '{path}'", [(str(path), e.strerror or str(e))]) from None
    return load_scenario(text)


def canonical_json(scenario: Scenario) -> str:
    return json.dumps(scenario.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def scenario_hash(scenario: Scenario) -> str:
    """First 16 hex digits of the sha256 of the canonical JSON."""
    return hashlib.sha256(canonical_json(scenario).encode("utf-8")).hexdigest()[:16]


def with_value(scenario: Scenario, path: str, value: Any) -> Scenario:
    """Copy of scenario with the dotted field path set to value, re-validated."""
    data = copy.deepcopy(scenario.model_dump(mode="json"))
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        if node.get(key) is None:
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value
    return scenario_from_dict(data)
