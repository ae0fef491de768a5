import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from jinja2 import Environment

from app.schemas.result import RunManifest

log = logging.getLogger(__name__)


def load_template(yaml_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Loads a report template document from a YAML file.

    Args:
        yaml_path: Path to the YAML file.

    Returns:
        dict: The parsed YAML content (`meta` and `template` keys).
    """
    p = Path(yaml_path)
    with open(p, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
        log.debug('Loaded report template from %s', p)
        return data


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f'{value:.6g}'
    if isinstance(value, (list, tuple)):
        return ', '.join(_fmt(v) for v in value)
    return str(value)


def render_report(path: Union[str, Path], manifest: RunManifest) -> str:
    """
    Renders the human-readable run report.

    Args:
        path: YAML template document.
        manifest: Manifest of the run being reported.

    Returns:
        str: Markdown text.

    Raises:
        ValueError: If the document has no template.
    """
    doc = load_template(path)
    template_text = doc.get('template')
    if not template_text:
        raise ValueError(f"Report template missing in {path}")
    env = Environment(keep_trailing_newline=True)
    env.filters['fmt'] = _fmt
    template = env.from_string(template_text)
    rendered = template.render(
        manifest=manifest,
        config=manifest.config.model_dump(mode='json'),
        summary=sorted(manifest.summary.items()),
        statistics=sorted(manifest.statistics.items()),
    )
    log.debug('Rendered report length=%d', len(rendered))
    return rendered


__all__ = ['load_template', 'render_report']
