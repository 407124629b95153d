import logging
import re
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # Python 3.10: tomli exposes the same API
    import tomli as tomllib
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.core.exceptions import ConfigError


# Configure Logging
logger = logging.getLogger(__name__)


class ExperimentConfigValidator:
    """
    Loads TOML experiment configs and turns schema violations into
    diagnostics that name the offending field and, where the key appears in
    the file, its line.
    """

    def __init__(self, schema):
        """
        Args:
            schema: Pydantic model class the document must validate into.
        """
        self.schema = schema
        # Regex Explanation:
        # ^\s*          -> Start of line and optional indentation
        # "?KEY"?       -> The key, bare or quoted
        # \s*=          -> Assignment
        self.key_pattern = "^\\s*\"?{key}\"?\\s*="

    def _find_line(self, text: str, key: str) -> Optional[int]:
        """Helper to locate the first assignment of ``key`` in the raw TOML."""
        pattern = re.compile(self.key_pattern.format(key=re.escape(key)), re.MULTILINE)
        match = pattern.search(text)
        if not match:
            return None
        return text.count("\n", 0, match.start()) + 1

    def load(self, path: str) -> Dict[str, Any]:
        """
        Reads and parses a TOML file.

        Raises:
            ConfigError: If the file is missing or is not valid TOML (line/column in the message).
        """
        try:
            with open(path, "rb") as f:
                return tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError(f"Config file not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: invalid TOML ({e})")

    def diagnostics(self, error: ValidationError, text: str = "") -> List[Dict[str, Any]]:
        """One entry per schema violation: dotted field path, message and line if known."""
        details = []
        for item in error.errors():
            loc = [str(part) for part in item["loc"]]
            named = [part for part in loc if not part.isdigit()]
            line = self._find_line(text, named[-1]) if text and named else None
            details.append({"field": ".".join(loc), "message": item["msg"], "line": line})
        return details

    def validate(self, data: Dict[str, Any], text: str = "", source: str = "<config>"):
        """
        Validates a parsed document against the schema.

        Raises:
            ConfigError: With every field diagnostic in the message.
        """
        try:
            return self.schema.model_validate(data)
        except ValidationError as e:
            lines = []
            for d in self.diagnostics(e, text):
                where = f" (line {d['line']})" if d["line"] else ""
                lines.append(f"  {d['field']}{where}: {d['message']}")
            message = f"{source}: invalid configuration\n" + "\n".join(lines)
            logger.error(message)
            raise ConfigError(message) from e

    def validate_file(self, path: str):
        data = self.load(path)
        with open(path, "r", encoding="utf-8", errors="ignore") as f:
            text = f.read()
        return self.validate(data, text, source=path)
