"""Client for an external retrieval service (dense retrievers, web search).

The service receives ``POST {"query": ..., "top_k": ...}`` and must answer
``{"results": [{"id", "title", "body", "score"?}, ...]}``.  Results keep the
service's ordering; ranks are set from position.
"""

from __future__ import annotations

import requests

from ..core import Document
from ..errors import MalformedResponse, TransportError

DEFAULT_TIMEOUT = 30.0


def retrieve_external(endpoint: str, query: str, top_k: int = 10,
                      timeout: float = DEFAULT_TIMEOUT) -> list[Document]:
    """Fetch up to ``top_k`` documents from ``endpoint`` for ``query``."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    try:
        resp = requests.post(endpoint, json={"query": query, "top_k": top_k},
                             timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"retrieval request to {endpoint} failed: {exc}") from exc
    if resp.status_code != 200:
        raise TransportError(f"HTTP {resp.status_code} from {endpoint}")
    try:
        payload = resp.json()
        results = payload["results"]
        docs = [
            Document(id=str(r["id"]), title=str(r.get("title", "")),
                     body=str(r["body"]), rank=rank)
            for rank, r in enumerate(results[:top_k], start=1)
        ]
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedResponse(f"unusable payload from {endpoint}: {exc}") from exc
    return docs
