"""Caregiver invitations: webhook POST when configured, console otherwise."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import httpx


class DeliveryError(Exception):
    pass


@dataclass(frozen=True)
class DeliveryReceipt:
    channel: str  # "webhook" | "console"
    target: str
    delivered_at: float


def notify_caregiver(
    join_url: str,
    webhook_url: str | None = None,
    *,
    time_fn: Callable[[], float] = time.time,
    post: Callable = httpx.post,
    console: Callable[[str], None] = print,
) -> DeliveryReceipt:
    """Send the caregiver their join link. Raises DeliveryError on failure."""
    message = f"Your child started a math practice session. Join here: {join_url}"
    if webhook_url:
        try:
            response = post(webhook_url, json={"text": message, "join_url": join_url}, timeout=10.0)
        except httpx.HTTPError as exc:
            raise DeliveryError(f"webhook unreachable: {exc}") from exc
        if response.status_code // 100 != 2:
            raise DeliveryError(f"webhook answered {response.status_code}")
        return DeliveryReceipt("webhook", webhook_url, time_fn())
    console(f"[notify] {message}")
    return DeliveryReceipt("console", "stdout", time_fn())
