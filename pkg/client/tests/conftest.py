import threading
import time

import pytest
import uvicorn

from alpsim.config import reference_config
from alpsim.service import create_app

from alpclient import ClientSession


@pytest.fixture(scope="session")
def server_url(tmp_path_factory):
    """Real HTTP server on an ephemeral local port."""
    app = create_app(
        {"run1": reference_config("run1"), "run2": reference_config("run2")},
        tmp_path_factory.mktemp("service-data"),
    )
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server failed to start")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture()
def session(server_url):
    with ClientSession(server_url) as s:
        yield s
