#!/usr/bin/env python3
"""Start the HTTP gateway.

    python scripts/serve.py [config.json]

Configuration comes from the optional config file with environment
overrides (CONSENTRY_LISTEN, CONSENTRY_STATE_DIR, CONSENTRY_REGISTRY_PATH,
CONSENTRY_LEDGER_PATH). If frontend/dist exists it is served at /.
"""

import sys
from pathlib import Path

import uvicorn

from consentry.gateway import create_app, load_config


def main() -> int:
    config = load_config(sys.argv[1] if len(sys.argv) > 1 else None)
    static = Path("frontend/dist")
    app = create_app(config, static_dir=static if static.is_dir() else None)
    print(f"listening on {config.listen}, state in {config.state_dir}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
