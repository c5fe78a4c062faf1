"""HTTP client for the simulator service.

By default requests are served in-process by mounting the ASGI app on an
httpx transport, so the CLI works with no server running and no sockets.
Pointing ``server`` at a URL sends the same requests over the network.
"""

from __future__ import annotations

import asyncio

import httpx

LOCAL_SERVER = "local"
_TIMEOUT = 600.0


class ServiceError(RuntimeError):
    """The service refused or failed a request."""

    def __init__(self, message: str, status_code: int | None = None) -> None:
        super().__init__(message)
        self.status_code = status_code


def _format_detail(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = None
    if detail is None:
        return f"HTTP {response.status_code}: {response.text[:200]}"
    if isinstance(detail, str):
        return detail
    if isinstance(detail, list):
        parts = []
        for item in detail:
            loc = ".".join(str(x) for x in item.get("loc", []) if x != "body")
            parts.append(f"{loc}: {item.get('msg', 'invalid value')}")
        return "; ".join(parts)
    return str(detail)


class ServiceClient:
    """Synchronous client; ``server='local'`` runs the app in-process."""

    def __init__(self, server: str = LOCAL_SERVER, timeout: float = _TIMEOUT) -> None:
        self.server = server
        self.timeout = timeout

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        if self.server == LOCAL_SERVER:
            response = asyncio.run(self._request_in_process(method, path, payload))
        else:
            try:
                with httpx.Client(
                    base_url=self.server, timeout=self.timeout
                ) as client:
                    response = client.request(method, path, json=payload)
            except httpx.HTTPError as exc:
                raise ServiceError(f"cannot reach {self.server}: {exc}") from exc
        if response.status_code >= 400:
            raise ServiceError(_format_detail(response), response.status_code)
        return response.json()

    async def _request_in_process(
        self, method: str, path: str, payload: dict | None
    ) -> httpx.Response:
        # imported lazily so remote-only use never builds the app
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://hybridqkd.local", timeout=self.timeout
        ) as client:
            return await client.request(method, path, json=payload)

    def health(self) -> dict:
        return self._request("GET", "/health")

    def run(self, payload: dict) -> dict:
        return self._request("POST", "/run", payload)

    def compare(self, payload: dict) -> dict:
        return self._request("POST", "/compare", payload)

    def sweep(self, payload: dict) -> dict:
        return self._request("POST", "/sweep", payload)

    def paradox(self) -> dict:
        return self._request("GET", "/paradox")
