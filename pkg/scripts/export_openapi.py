"""Regenerate docs/openapi.json from the live FastAPI app."""

import json
import tempfile
from pathlib import Path

from layoutloop.service import ServiceConfig, create_app

app = create_app(ServiceConfig(data_dir=Path(tempfile.mkdtemp())))
out = Path(__file__).resolve().parent.parent / "docs" / "openapi.json"
out.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n")
print(f"wrote {out}")
