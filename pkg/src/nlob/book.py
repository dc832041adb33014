"""Price-level FIFO order book with the one-contract-per-level maker policy.

Each level holds orders of one side only; a limit order that reaches the
opposite side trades against it (best price first, FIFO within a level)
before any residual rests. Under the maker policy every level near the ask
carries exactly one contract, so each unit market order moves the ask by one
tick and the ask performs the birth-death walk of the price model.
"""

from __future__ import annotations

import bisect
import csv
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

BUY, SELL = "buy", "sell"


@dataclass
class Order:
    id: str
    side: str
    price: int
    qty: int
    arrival: int = -1

    def __post_init__(self):
        if self.side not in (BUY, SELL):
            raise ValueError(f"side must be 'buy' or 'sell', got {self.side!r}")
        if int(self.qty) < 1:
            raise ValueError("qty must be >= 1")
        self.price = int(self.price)
        self.qty = int(self.qty)


@dataclass(frozen=True)
class Fill:
    maker_id: str
    taker_id: str
    price: int
    qty: int
    maker_arrival: int = -1


@dataclass
class MarketResult:
    fills: list
    requested: int

    @property
    def filled(self) -> int:
        return sum(f.qty for f in self.fills)

    @property
    def partial(self) -> bool:
        return self.filled < self.requested


class _Side:
    """Levels of one side: sorted prices plus a FIFO deque per level."""

    def __init__(self, best_is_max: bool):
        self.levels: dict[int, deque] = {}
        self.prices: list[int] = []
        self.best_is_max = best_is_max
        self.units = 0

    def best(self):
        if not self.prices:
            return None
        return self.prices[-1] if self.best_is_max else self.prices[0]

    def add(self, order: Order):
        q = self.levels.get(order.price)
        if q is None:
            q = self.levels[order.price] = deque()
            bisect.insort(self.prices, order.price)
        q.append(order)
        self.units += order.qty

    def pop_level_if_empty(self, price: int):
        if not self.levels[price]:
            del self.levels[price]
            self.prices.pop(bisect.bisect_left(self.prices, price))

    def depth(self) -> int:
        return self.units

    def snapshot(self) -> dict:
        return {p: tuple((o.id, o.qty) for o in self.levels[p]) for p in self.prices}


class Book:
    """Single-owner mutable order book on integer price levels."""

    def __init__(self, anchor: int = 0, span: int = 10):
        self.bids = _Side(best_is_max=True)
        self.asks = _Side(best_is_max=False)
        self.anchor = int(anchor)
        self.span = int(span)
        self._ids: set[str] = set()
        self._arrivals = itertools.count()
        self._maker_ids = itertools.count()
        self._taker_ids = itertools.count()
        self.last_taken: str | None = None

    @property
    def best_bid(self):
        return self.bids.best()

    @property
    def best_ask(self):
        return self.asks.best()

    def is_crossed(self) -> bool:
        bid, ask = self.best_bid, self.best_ask
        return bid is not None and ask is not None and bid >= ask

    def resting_units(self) -> int:
        return self.bids.depth() + self.asks.depth()

    def snapshot(self) -> tuple[dict, dict]:
        return self.bids.snapshot(), self.asks.snapshot()

    def _consume(self, taker_id: str, side: str, qty: int, limit: int | None) -> list:
        book_side = self.asks if side == BUY else self.bids
        fills = []
        while qty > 0:
            best = book_side.best()
            if best is None:
                break
            if limit is not None and (best > limit if side == BUY else best < limit):
                break
            queue = book_side.levels[best]
            maker = queue[0]
            take = min(qty, maker.qty)
            fills.append(Fill(maker.id, taker_id, best, take, maker.arrival))
            maker.qty -= take
            book_side.units -= take
            qty -= take
            if maker.qty == 0:
                queue.popleft()
                self._ids.discard(maker.id)
                book_side.pop_level_if_empty(best)
        if fills:
            self.last_taken = SELL if side == BUY else BUY
        return fills

    def submit_limit(self, order: Order) -> list:
        """Cross ``order`` against the opposite side, then rest any residual."""
        if order.id in self._ids:
            raise ValueError(f"duplicate order id {order.id!r}")
        order.arrival = next(self._arrivals)
        fills = self._consume(order.id, order.side, order.qty, order.price)
        residual = order.qty - sum(f.qty for f in fills)
        if residual:
            order.qty = residual
            self._ids.add(order.id)
            (self.bids if order.side == BUY else self.asks).add(order)
        return fills

    def submit_market(self, side: str, qty: int, taker_id: str | None = None) -> MarketResult:
        """Take ``qty`` units from the opposite side; a short book gives a partial result."""
        if side not in (BUY, SELL):
            raise ValueError(f"side must be 'buy' or 'sell', got {side!r}")
        if qty < 1:
            raise ValueError("qty must be >= 1")
        taker_id = taker_id if taker_id is not None else f"tk{next(self._taker_ids)}"
        return MarketResult(self._consume(taker_id, side, int(qty), None), int(qty))

    def _place_maker(self, side: str, price: int):
        order = Order(f"mk{next(self._maker_ids)}", side, price, 1, next(self._arrivals))
        self._ids.add(order.id)
        (self.bids if side == BUY else self.asks).add(order)

    def _target_ask(self) -> int:
        bid, ask = self.best_bid, self.best_ask
        if bid is None and ask is None:
            return self.anchor
        if ask is None:
            return bid + 1
        if bid is None or ask - bid <= 1:
            return ask
        if ask - bid == 2 and self.last_taken == BUY:
            # the emptied bid level is refilled by the ask maker
            return bid + 1
        return ask

    def maker_refill(self, span: int | None = None) -> "Book":
        """Put one contract on every empty level within ``span`` of the ask.

        Levels ``a..a+span-1`` get asks and ``a-span..a-1`` get bids, where
        ``a`` is the ask after the makers have refilled the level a taker just
        emptied. Idempotent.
        """
        span = self.span if span is None else int(span)
        a = self._target_ask()
        for price in range(a, a + span):
            if price not in self.asks.levels and price not in self.bids.levels:
                self._place_maker(SELL, price)
        for price in range(a - 1, a - span - 1, -1):
            if price not in self.bids.levels and price not in self.asks.levels:
                self._place_maker(BUY, price)
        return self


def one_per_level_book(anchor: int = 0, span: int = 10) -> Book:
    """Fully stocked book: asks at ``anchor..``, bids below it."""
    return Book(anchor, span).maker_refill()


def _signs(events) -> Iterable[int]:
    for e in events:
        sign = e[-1] if isinstance(e, (tuple, list)) else e
        if sign not in (1, -1):
            raise ValueError(f"event sign must be +1 or -1, got {sign!r}")
        yield sign


def replay_ask_path(taker_events, start_ask: int = 0, span: int = 10) -> list[int]:
    """Ask levels after each unit market order plus maker refill."""
    book = one_per_level_book(start_ask, span)
    path = [book.best_ask]
    for sign in _signs(taker_events):
        book.submit_market(BUY if sign == 1 else SELL, 1)
        book.maker_refill()
        path.append(book.best_ask)
    return path


def replay_equivalence(taker_events, start_ask: int = 0, span: int = 10) -> bool:
    """True iff the book's ask path equals the birth-death walk ``n -> n +/- 1``."""
    events = list(taker_events)
    book_path = replay_ask_path(events, start_ask, span)
    direct = [start_ask]
    for sign in _signs(events):
        direct.append(direct[-1] + sign)
    return book_path == direct


@dataclass
class ReplayRecord:
    t: float
    fills: list = field(default_factory=list)


def replay_market_orders(rows, start_ask: int = 0, span: int = 10) -> list:
    """Run ``(t, side, qty)`` market orders through a maker-refilled book."""
    book = one_per_level_book(start_ask, span)
    out = []
    for t, side, qty in rows:
        result = book.submit_market(side, int(qty))
        book.maker_refill()
        out.append(ReplayRecord(float(t), result.fills))
    return out


def read_replay_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"t", "side", "qty"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"replay CSV lacks columns {sorted(missing)}")
        return [(float(r["t"]), r["side"].strip(), int(r["qty"])) for r in reader]


def write_fills_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "maker_id", "price", "qty"])
        for rec in records:
            for f in rec.fills:
                w.writerow([repr(rec.t), f.maker_id, f.price, f.qty])


__all__ = [
    "BUY",
    "Book",
    "Fill",
    "MarketResult",
    "Order",
    "SELL",
    "one_per_level_book",
    "read_replay_csv",
    "replay_ask_path",
    "replay_equivalence",
    "replay_market_orders",
    "write_fills_csv",
]
